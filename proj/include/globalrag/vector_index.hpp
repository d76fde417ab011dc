#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "globalrag/corpus.hpp"
#include "globalrag/embedding.hpp"

namespace globalrag {

struct RetrievalHit {
  DocId doc_id;
  double score = 0.0;  // cosine similarity in [-1, 1]

  bool operator==(const RetrievalHit&) const = default;
};

/// Ranking order: higher score first, ties by ascending document id.
bool ranks_before(const RetrievalHit& a, const RetrievalHit& b);

/// Cosine similarity; 0 when either vector has zero norm. Symmetric.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Flat exact-scan index, one entry per document, in corpus order.
class VectorIndex {
public:
  struct Entry {
    DocId doc_id;
    Embedding vector;
    double norm = 0.0;
  };

  VectorIndex(std::size_t dim, std::string embedder_name);

  /// Throws IndexBuildError on dimension mismatch or non-finite values.
  void add(DocId doc_id, Embedding vector);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] const std::string& embedder_name() const noexcept { return embedder_name_; }
  [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// Top-`k` entries by cosine similarity to `query`, using a size-k heap.
  [[nodiscard]] std::vector<RetrievalHit> search(std::span<const double> query,
                                                 std::size_t k) const;

private:
  std::size_t dim_;
  std::string embedder_name_;
  std::vector<Entry> entries_;
};

struct IndexBuildOptions {
  std::size_t batch_size = 16;
  /// Upper bound on concurrently running embed() calls.
  std::size_t max_in_flight = 4;
};

/// Embeds every document text. Entry order matches corpus order regardless of
/// which batch finishes first. Throws IndexBuildError naming the document.
VectorIndex build_index(const Corpus& corpus, Embedder& embedder,
                        const IndexBuildOptions& options = {});

/// Embeds `query` and returns min(k, |index|) hits. Throws RetrievalError.
std::vector<RetrievalHit> retrieve(const VectorIndex& index, const std::string& query,
                                   Embedder& embedder, std::size_t k);

/// JSONL sidecar: a header line {format, version, embedder, dim} followed by
/// one {id, vector} object per entry.
void save_index(const VectorIndex& index, std::ostream& out);
std::string index_to_jsonl(const VectorIndex& index);
VectorIndex load_index(std::istream& in);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace globalrag
