#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace globalrag {

using DocId = std::string;
using DocIdSet = std::set<DocId>;
using StringList = std::vector<std::string>;

/// Closed attribute value model: number, string, or list of strings.
using AttributeValue = std::variant<double, std::string, StringList>;
using AttributeMap = std::map<std::string, AttributeValue, std::less<>>;

struct Document {
  DocId id;
  std::string domain;
  std::string text;
  AttributeMap attributes;

  /// Returns nullptr when the attribute is absent.
  [[nodiscard]] const AttributeValue* attribute(std::string_view name) const;

  /// Display label: the "name" attribute when present, otherwise the id.
  [[nodiscard]] std::string label() const;

  bool operator==(const Document&) const = default;
};

/// Immutable-after-ingest ordered document collection with unique ids.
class Corpus {
public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  /// Appends a document. Throws IngestionError on a duplicate or empty id,
  /// empty text, or a non-finite numeric attribute.
  void add(Document doc);

  [[nodiscard]] std::size_t size() const noexcept { return docs_.size(); }
  [[nodiscard]] bool empty() const noexcept { return docs_.empty(); }
  [[nodiscard]] const Document& operator[](std::size_t i) const { return docs_[i]; }
  [[nodiscard]] auto begin() const noexcept { return docs_.begin(); }
  [[nodiscard]] auto end() const noexcept { return docs_.end(); }
  [[nodiscard]] const std::vector<Document>& documents() const noexcept { return docs_; }

  [[nodiscard]] const Document* find(std::string_view id) const;
  [[nodiscard]] bool contains(std::string_view id) const { return find(id) != nullptr; }
  [[nodiscard]] std::vector<DocId> ids() const;
  [[nodiscard]] std::set<std::string> domain_set() const;

  bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Reads the corpus JSONL format: one {id, domain, text, attributes} object
/// per line. Throws ParseError (with line number) or IngestionError.
Corpus ingest_jsonl(const std::filesystem::path& path);
Corpus parse_corpus_jsonl(std::istream& in);

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
std::string corpus_to_jsonl(const Corpus& corpus);

/// True when every attribute value (each list element for lists) appears
/// verbatim in the document text.
bool attributes_rendered(const Document& doc);

/// Canonical text form of a number: shortest round-trip decimal, no trailing
/// ".0" on integers.
std::string format_number(double value);

}  // namespace globalrag
