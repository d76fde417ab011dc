#include "globalrag/vector_index.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <queue>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "globalrag/errors.hpp"
#include "globalrag/jsonl.hpp"

namespace globalrag {

namespace {

constexpr std::string_view kIndexFormat = "globalrag-index";
constexpr int kIndexVersion = 1;

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_with_norms(std::span<const double> a, double norm_a, std::span<const double> b,
                         double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace

bool ranks_before(const RetrievalHit& a, const RetrievalHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw RetrievalError("cosine of vectors with different dimensions");
  return cosine_with_norms(a, l2_norm(a), b, l2_norm(b));
}

VectorIndex::VectorIndex(std::size_t dim, std::string embedder_name)
    : dim_(dim), embedder_name_(std::move(embedder_name)) {}

void VectorIndex::add(DocId doc_id, Embedding vector) {
  if (vector.size() != dim_) {
    throw IndexBuildError(doc_id, "embedding has dimension " + std::to_string(vector.size()) +
                                      ", index expects " + std::to_string(dim_));
  }
  if (!std::all_of(vector.begin(), vector.end(), [](double x) { return std::isfinite(x); })) {
    throw IndexBuildError(doc_id, "embedding contains non-finite values");
  }
  double norm = l2_norm(vector);
  entries_.push_back(Entry{std::move(doc_id), std::move(vector), norm});
}

std::vector<RetrievalHit> VectorIndex::search(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_) {
    throw RetrievalError("query embedding has dimension " + std::to_string(query.size()) +
                         ", index expects " + std::to_string(dim_));
  }
  if (k == 0) throw RetrievalError("k must be at least 1");
  const double qnorm = l2_norm(query);

  // Max-heap under ranks_before: top() is the weakest hit kept so far.
  std::priority_queue<RetrievalHit, std::vector<RetrievalHit>, decltype(&ranks_before)> heap(
      &ranks_before);
  for (const auto& e : entries_) {
    RetrievalHit hit{e.doc_id, cosine_with_norms(query, qnorm, e.vector, e.norm)};
    if (heap.size() < k) {
      heap.push(std::move(hit));
    } else if (ranks_before(hit, heap.top())) {
      heap.pop();
      heap.push(std::move(hit));
    }
  }
  std::vector<RetrievalHit> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

VectorIndex build_index(const Corpus& corpus, Embedder& embedder,
                        const IndexBuildOptions& options) {
  const std::size_t n = corpus.size();
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t n_batches = (n + batch - 1) / batch;
  std::vector<std::optional<std::vector<Embedding>>> results(n_batches);
  std::vector<std::exception_ptr> failures(n_batches);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      std::vector<std::string> texts;
      for (std::size_t i = b * batch; i < std::min(n, (b + 1) * batch); ++i) {
        texts.push_back(corpus[i].text);
      }
      try {
        results[b] = embedder.embed(texts);
      } catch (...) {
        failures[b] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, options.max_in_flight), n_batches);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  VectorIndex index(embedder.dim(), embedder.name());
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t first = b * batch;
    if (failures[b]) {
      try {
        std::rethrow_exception(failures[b]);
      } catch (const std::exception& e) {
        throw IndexBuildError(corpus[first].id, std::string("embedder failed: ") + e.what());
      }
    }
    auto& vectors = *results[b];
    const std::size_t expected = std::min(n, first + batch) - first;
    if (vectors.size() != expected) {
      throw IndexBuildError(corpus[first].id, "embedder returned " +
                                                  std::to_string(vectors.size()) + " vectors for " +
                                                  std::to_string(expected) + " texts");
    }
    for (std::size_t j = 0; j < expected; ++j) {
      index.add(corpus[first + j].id, std::move(vectors[j]));
    }
  }
  return index;
}

std::vector<RetrievalHit> retrieve(const VectorIndex& index, const std::string& query,
                                   Embedder& embedder, std::size_t k) {
  if (k == 0) throw RetrievalError("k must be at least 1");
  Embedding q;
  try {
    q = embedder.embed_one(query);
  } catch (const RetrievalError&) {
    throw;
  } catch (const std::exception& e) {
    throw RetrievalError(std::string("query embedding failed: ") + e.what());
  }
  if (!std::all_of(q.begin(), q.end(), [](double x) { return std::isfinite(x); })) {
    throw RetrievalError("query embedding contains non-finite values");
  }
  return index.search(q, k);
}

void save_index(const VectorIndex& index, std::ostream& out) {
  nlohmann::ordered_json header;
  header["format"] = kIndexFormat;
  header["version"] = kIndexVersion;
  header["embedder"] = index.embedder_name();
  header["dim"] = index.dim();
  out << header.dump() << '\n';
  for (const auto& e : index.entries()) {
    nlohmann::ordered_json line;
    line["id"] = e.doc_id;
    line["vector"] = e.vector;
    out << line.dump() << '\n';
  }
}

std::string index_to_jsonl(const VectorIndex& index) {
  std::ostringstream ss;
  save_index(index, ss);
  return ss.str();
}

VectorIndex load_index(std::istream& in) {
  std::optional<VectorIndex> index;
  jsonl::for_each_line(in, [&](std::size_t line, const nlohmann::json& obj) {
    if (!index) {
      if (obj.value("format", "") != kIndexFormat) throw ParseError(line, "not an index file");
      if (obj.value("version", 0) != kIndexVersion) {
        throw ParseError(line, "unsupported index version");
      }
      index.emplace(obj.at("dim").get<std::size_t>(), obj.at("embedder").get<std::string>());
      return;
    }
    if (!obj.contains("id") || !obj.contains("vector")) {
      throw ParseError(line, "index entry needs 'id' and 'vector'");
    }
    index->add(obj["id"].get<std::string>(), obj["vector"].get<Embedding>());
  });
  if (!index) throw ParseError(0, "empty index file");
  return std::move(*index);
}

VectorIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open index file " + path.string());
  return load_index(in);
}

}  // namespace globalrag
