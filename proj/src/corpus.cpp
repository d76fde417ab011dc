#include "globalrag/corpus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "globalrag/errors.hpp"
#include "globalrag/jsonl.hpp"

namespace globalrag {

const AttributeValue* Document::attribute(std::string_view name) const {
  auto it = attributes.find(name);
  return it == attributes.end() ? nullptr : &it->second;
}

std::string Document::label() const {
  if (const auto* v = attribute("name")) {
    if (const auto* s = std::get_if<std::string>(v); s && !s->empty()) return *s;
  }
  return id;
}

Corpus::Corpus(std::vector<Document> documents) {
  docs_.reserve(documents.size());
  for (auto& d : documents) add(std::move(d));
}

void Corpus::add(Document doc) {
  if (doc.id.empty()) throw IngestionError("document with empty id");
  if (doc.text.empty()) throw IngestionError("document '" + doc.id + "' has empty text");
  for (const auto& [name, value] : doc.attributes) {
    if (const auto* x = std::get_if<double>(&value); x && !std::isfinite(*x)) {
      throw IngestionError("document '" + doc.id + "': attribute '" + name + "' is not finite");
    }
  }
  if (by_id_.contains(doc.id)) throw IngestionError("duplicate document id '" + doc.id + "'");
  by_id_.emplace(doc.id, docs_.size());
  docs_.push_back(std::move(doc));
}

const Document* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::vector<DocId> Corpus::ids() const {
  std::vector<DocId> out;
  out.reserve(docs_.size());
  for (const auto& d : docs_) out.push_back(d.id);
  return out;
}

std::set<std::string> Corpus::domain_set() const {
  std::set<std::string> out;
  for (const auto& d : docs_) out.insert(d.domain);
  return out;
}

namespace {

AttributeValue attribute_from_json(const nlohmann::json& j, std::size_t line, const std::string& key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    StringList list;
    for (const auto& e : j) {
      if (!e.is_string()) throw ParseError(line, "attribute '" + key + "' list must hold strings");
      list.push_back(e.get<std::string>());
    }
    return list;
  }
  throw ParseError(line, "attribute '" + key + "' must be a number, string or string array");
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus parse_corpus_jsonl(std::istream& in) {
  Corpus corpus;
  jsonl::for_each_line(in, [&](std::size_t line, const nlohmann::json& obj) {
    Document doc;
    doc.id = required_string(obj, "id", line);
    doc.domain = required_string(obj, "domain", line);
    doc.text = required_string(obj, "text", line);
    if (auto it = obj.find("attributes"); it != obj.end()) {
      if (!it->is_object()) throw ParseError(line, "'attributes' must be an object");
      for (const auto& [key, value] : it->items()) {
        doc.attributes.emplace(key, attribute_from_json(value, line, key));
      }
    }
    corpus.add(std::move(doc));
  });
  return corpus;
}

Corpus ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open corpus file " + path.string());
  return parse_corpus_jsonl(in);
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus) {
    nlohmann::ordered_json attrs = nlohmann::ordered_json::object();
    for (const auto& [key, value] : doc.attributes) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              attrs[key] = jsonl::number(v);
            } else {
              attrs[key] = v;
            }
          },
          value);
    }
    nlohmann::ordered_json obj;
    obj["id"] = doc.id;
    obj["domain"] = doc.domain;
    obj["text"] = doc.text;
    obj["attributes"] = std::move(attrs);
    out << obj.dump() << '\n';
  }
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus_jsonl(corpus, ss);
  return ss.str();
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf, end);
}

bool attributes_rendered(const Document& doc) {
  for (const auto& [name, value] : doc.attributes) {
    bool ok = std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            return doc.text.find(format_number(v)) != std::string::npos;
          } else if constexpr (std::is_same_v<T, std::string>) {
            return doc.text.find(v) != std::string::npos;
          } else {
            for (const auto& s : v) {
              if (doc.text.find(s) == std::string::npos) return false;
            }
            return true;
          }
        },
        value);
    if (!ok) return false;
  }
  return true;
}

}  // namespace globalrag
