#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "globalrag/corpus.hpp"
#include "globalrag/embedding.hpp"
#include "globalrag/errors.hpp"
#include "globalrag/evaluation.hpp"
#include "globalrag/generator.hpp"
#include "globalrag/http.hpp"
#include "globalrag/jsonl.hpp"
#include "globalrag/llm_gateway.hpp"
#include "globalrag/pipeline.hpp"
#include "globalrag/simulated_llm.hpp"
#include "globalrag/vector_index.hpp"

namespace globalrag::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kLlmUrlEnv = "GLOBALRAG_LLM_URL";
constexpr const char* kEmbedUrlEnv = "GLOBALRAG_EMBED_URL";
constexpr const char* kApiKeyEnv = "OPENAI_API_KEY";

struct Settings {
  std::string config;
  std::uint64_t seed = 0;
  bool force = false;
  std::string log_level = "warn";
  std::string output;

  std::size_t docs = 2000;
  std::size_t domains = 23;
  std::size_t count = 2000;

  std::string corpus;
  std::string dataset;
  std::string index;
  std::string traces;
  std::string input;

  std::string embedder;  // empty: hashing for `index`, inferred from the index for `run`
  std::size_t dim = 256;
  std::size_t jobs = 1;

  std::string strategy = "globalrag";
  std::size_t max_iterations = 10;
  std::size_t k = 20;
  double prefilter_min_score = 0.0;
  std::string extraction = "structured";
  std::string retriever = "dense";
  std::string llm = "simulated";
  std::string filter_model;  // empty: same as --llm
  std::string planner = "clauses";
  std::string record;
  std::size_t limit = 0;

  std::size_t eval_k = 20;
  std::string axis;
  std::string values;
  std::string format = "text";
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* sub, Settings& s) {
  sub->add_option("--config", s.config, "JSON file with option defaults");
  sub->add_option("--seed", s.seed, "Seed for every random choice");
  sub->add_flag("--force", s.force, "Overwrite existing outputs");
  sub->add_option("--log-level", s.log_level)
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
}

void add_run_options(CLI::App* sub, Settings& s) {
  sub->add_option("--corpus", s.corpus, "Corpus JSONL")->required();
  sub->add_option("--dataset", s.dataset, "Dataset JSONL")->required();
  sub->add_option("--index", s.index, "Index JSONL (dense retrieval)");
  sub->add_option("--embedder", s.embedder, "hashing, hashing-d<dim>-s<seed> or remote:<model>");
  sub->add_option("--dim", s.dim, "Embedding dimension");
  sub->add_option("--strategy", s.strategy)
      ->check(CLI::IsMember({"globalrag", "standard_rag", "iterative"}));
  sub->add_option("--max-iterations", s.max_iterations)->check(CLI::PositiveNumber);
  sub->add_option("--k", s.k, "Documents retrieved per round")->check(CLI::PositiveNumber);
  sub->add_option("--prefilter-min-score", s.prefilter_min_score);
  sub->add_option("--extraction", s.extraction)
      ->check(CLI::IsMember({"structured", "llm", "text_pattern"}));
  sub->add_option("--retriever", s.retriever)->check(CLI::IsMember({"dense", "gold"}));
  sub->add_option("--llm", s.llm, "simulated, replay:<cassette> or remote:<model>");
  sub->add_option("--filter-model", s.filter_model, "Backend for relevance judgments");
  sub->add_option("--planner", s.planner)->check(CLI::IsMember({"clauses", "done"}));
  sub->add_option("--record", s.record, "Append LLM exchanges to this cassette");
  sub->add_option("--jobs", s.jobs, "Queries run concurrently")->check(CLI::PositiveNumber);
  sub->add_option("--limit", s.limit, "Run only the first N queries");
  sub->add_option("--eval-k", s.eval_k, "k for D-F1@k in sweep reports")->check(CLI::PositiveNumber);
}

std::unique_ptr<CLI::App> make_app(Settings& s) {
  auto app = std::make_unique<CLI::App>("Global retrieval-augmented QA toolkit", "globalrag");
  app->require_subcommand(1, 1);

  auto* gc = app->add_subcommand("gen-corpus", "Generate a synthetic resume corpus");
  add_common(gc, s);
  gc->add_option("--docs", s.docs)->check(CLI::PositiveNumber);
  gc->add_option("--domains", s.domains)->check(CLI::PositiveNumber);
  gc->add_option("-o,--output", s.output)->required();

  auto* gd = app->add_subcommand("gen-dataset", "Generate and validate benchmark questions");
  add_common(gd, s);
  gd->add_option("--corpus", s.corpus)->required();
  gd->add_option("--count", s.count)->check(CLI::PositiveNumber);
  gd->add_option("-o,--output", s.output)->required();

  auto* ix = app->add_subcommand("index", "Embed a corpus into a flat index");
  add_common(ix, s);
  ix->add_option("--corpus", s.corpus)->required();
  ix->add_option("--embedder", s.embedder, "hashing or remote:<model>");
  ix->add_option("--dim", s.dim)->check(CLI::PositiveNumber);
  ix->add_option("--jobs", s.jobs)->check(CLI::PositiveNumber);
  ix->add_option("-o,--output", s.output)->required();

  auto* run = app->add_subcommand("run", "Answer dataset questions and write traces");
  add_common(run, s);
  add_run_options(run, s);
  run->add_option("-o,--output", s.output)->required();

  auto* ev = app->add_subcommand("eval", "Score traces against a dataset");
  add_common(ev, s);
  ev->add_option("--traces", s.traces)->required();
  ev->add_option("--dataset", s.dataset)->required();
  ev->add_option("--k", s.eval_k)->check(CLI::PositiveNumber);
  ev->add_option("-o,--output", s.output, "Write the JSON report here");

  auto* sw = app->add_subcommand("sweep", "Run one configuration axis over several values");
  add_common(sw, s);
  add_run_options(sw, s);
  sw->add_option("--axis", s.axis)
      ->required()
      ->check(CLI::IsMember({"max_iterations", "retrieve_k", "embedder", "filter_model"}));
  sw->add_option("--values", s.values, "Comma-separated axis values")->required();
  sw->add_option("-o,--output", s.output, "Output directory")->required();

  auto* rp = app->add_subcommand("report", "Render a JSON report");
  add_common(rp, s);
  rp->add_option("--input", s.input)->required();
  rp->add_option("--format", s.format)->check(CLI::IsMember({"text", "json"}));
  return app;
}

void parse(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  app.parse(args);
}

CLI::App* selected(CLI::App& app) {
  auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.front();
}

/// Turns config-file entries for options not given on the command line into
/// extra arguments, so flags override the file and the file overrides defaults.
std::vector<std::string> config_args(CLI::App& sub, const std::string& path) {
  json cfg;
  try {
    cfg = json::parse(jsonl::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw InputError("config " + path + " must be a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    std::string name = "--" + key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw(name);
    if (!opt || name == "--config") throw UsageError("config key '" + key + "' is not an option of " + sub.get_name());
    if (opt->count() > 0) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(name);
      continue;
    }
    extra.push_back(name);
    if (value.is_string()) {
      extra.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      }
      extra.push_back(joined);
    } else {
      extra.push_back(value.dump());
    }
  }
  return extra;
}

void ensure_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) {
    throw InputError("refusing to overwrite " + path.string() + " (pass --force)");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

HttpTransport& transport() {
  static HttplibTransport t;
  return t;
}

std::unique_ptr<Embedder> make_embedder(const std::string& spec, std::size_t dim,
                                        std::uint64_t seed) {
  if (spec.empty() || spec == "hashing") return std::make_unique<HashingEmbedder>(dim, seed);
  if (spec.starts_with("hashing-d")) {
    std::size_t d = 0;
    unsigned long long sd = 0;
    if (std::sscanf(spec.c_str(), "hashing-d%zu-s%llu", &d, &sd) == 2 && d > 0) {
      return std::make_unique<HashingEmbedder>(d, sd);
    }
  }
  if (spec.starts_with("remote:")) {
    RemoteEmbedderConfig cfg;
    cfg.url = env_or(kEmbedUrlEnv, "http://localhost:8080/v1/embeddings");
    cfg.model = spec.substr(7);
    cfg.api_key = env_or(kApiKeyEnv, "");
    cfg.dim = dim;
    return std::make_unique<RemoteEmbedder>(cfg, transport());
  }
  throw InputError("unknown embedder '" + spec + "'");
}

std::shared_ptr<ChatBackend> make_backend(const std::string& spec, const Corpus& corpus,
                                          std::span<const QueryRecord> dataset,
                                          PlannerMode planner) {
  if (spec == "simulated" || spec == "oracle") {
    return make_simulated_backend(corpus, dataset, SimulatedLlmOptions{planner});
  }
  if (spec.starts_with("replay:")) {
    auto mock = std::make_shared<MockChatBackend>("replay");
    mock->load_cassette(fs::path(spec.substr(7)));
    return mock;
  }
  if (spec.starts_with("remote:")) {
    RemoteChatConfig cfg;
    cfg.url = env_or(kLlmUrlEnv, "http://localhost:8000/v1/chat/completions");
    cfg.model = spec.substr(7);
    cfg.api_key_env = kApiKeyEnv;
    return std::make_shared<RemoteChatBackend>(cfg, transport());
  }
  throw InputError("unknown LLM backend '" + spec + "'");
}

PipelineConfig pipeline_config(const Settings& s) {
  PipelineConfig c;
  c.max_iterations = s.max_iterations;
  c.retrieve_k = s.k;
  c.prefilter_min_score = s.prefilter_min_score;
  c.strategy = parse_strategy(s.strategy);
  c.extraction = parse_extraction_mode(s.extraction);
  c.filter_parallelism = 1;
  c.validate();
  return c;
}

struct RunInputs {
  Corpus corpus;
  std::vector<QueryRecord> dataset;
  std::optional<VectorIndex> index;
};

RunInputs load_run_inputs(const Settings& s) {
  RunInputs in;
  in.corpus = ingest_jsonl(s.corpus);
  in.dataset = load_dataset(s.dataset);
  if (s.limit > 0 && in.dataset.size() > s.limit) in.dataset.resize(s.limit);
  if (s.retriever == "dense" && !s.index.empty()) in.index = load_index(fs::path(s.index));
  return in;
}

std::vector<RunTrace> execute(const Settings& s, const RunInputs& in, const VectorIndex* index) {
  const PipelineConfig config = pipeline_config(s);
  const PlannerMode planner = s.planner == "done" ? PlannerMode::done : PlannerMode::clauses;

  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<Retriever> retriever;
  if (s.retriever == "gold") {
    retriever = std::make_unique<FixedRetriever>(gold_retriever(in.dataset));
  } else {
    if (!index) throw InputError("dense retrieval needs --index");
    const std::string spec = s.embedder.empty() ? index->embedder_name() : s.embedder;
    embedder = make_embedder(spec, index->dim(), s.seed);
    if (embedder->name() != index->embedder_name()) {
      throw InputError("index was built with '" + index->embedder_name() +
                       "' but queries would use '" + embedder->name() + "'");
    }
    retriever = std::make_unique<DenseRetriever>(*index, *embedder);
  }

  GatewayOptions reader_opts;
  reader_opts.max_in_flight = std::max<std::size_t>(4, s.jobs);
  if (!s.record.empty()) reader_opts.record_to = fs::path(s.record);
  LlmGateway reader(make_backend(s.llm, in.corpus, in.dataset, planner), reader_opts);

  const std::string filter_spec = s.filter_model.empty() ? s.llm : s.filter_model;
  GatewayOptions filter_opts = reader_opts;
  if (filter_opts.record_to) filter_opts.record_to = fs::path(s.record + ".filter");
  LlmGateway filter(make_backend(filter_spec, in.corpus, in.dataset, planner), filter_opts);

  Pipeline pipeline(in.corpus, *retriever, reader, filter, config);
  auto traces = pipeline.run_batch(in.dataset, s.jobs);
  const auto m = pipeline.filter_metrics();
  spdlog::info("filter: {} LLM calls, {} cache hits, {} unparseable", m.llm_calls, m.cache_hits,
               m.unparseable);
  return traces;
}

std::string dump_report(const EvalReport& report) { return to_json(report).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_corpus(const Settings& s, std::ostream& out) {
  const fs::path path(s.output);
  ensure_writable(path, s.force);
  const Corpus corpus = generate_corpus(s.seed, s.docs, s.domains);
  jsonl::atomic_write(path, corpus_to_jsonl(corpus));
  out << "wrote " << corpus.size() << " documents to " << path.string() << "\n";
  return 0;
}

int cmd_gen_dataset(const Settings& s, std::ostream& out) {
  const fs::path path(s.output);
  const fs::path report_path = path.string() + ".report.json";
  ensure_writable(path, s.force);
  ensure_writable(report_path, s.force);
  const Corpus corpus = ingest_jsonl(s.corpus);
  DatasetConfig config;
  config.seed = s.seed;
  config.count = s.count;
  GenerationReport gen;
  const auto records = generate_dataset(corpus, config, &gen);
  const ValidationReport val = validate_and_save(records, corpus, path);
  json failed = json::object();
  for (const auto& [bucket, n] : gen.failed_slots) failed[bucket] = n;
  json report{{"requested", gen.requested},
              {"generated", gen.generated},
              {"failed_slots", failed},
              {"validation", to_json(val)}};
  jsonl::atomic_write(report_path, report.dump(2) + "\n");
  out << "wrote " << val.saved << " of " << gen.requested << " requested questions to "
      << path.string() << "\n";
  return 0;
}

int cmd_index(const Settings& s, std::ostream& out) {
  const fs::path path(s.output);
  ensure_writable(path, s.force);
  const Corpus corpus = ingest_jsonl(s.corpus);
  auto embedder = make_embedder(s.embedder, s.dim, s.seed);
  IndexBuildOptions opts;
  opts.max_in_flight = s.jobs;
  const VectorIndex index = build_index(corpus, *embedder, opts);
  jsonl::atomic_write(path, index_to_jsonl(index));
  out << "indexed " << index.size() << " documents with " << index.embedder_name() << "\n";
  return 0;
}

int cmd_run(const Settings& s, std::ostream& out) {
  const fs::path path(s.output);
  ensure_writable(path, s.force);
  const RunInputs in = load_run_inputs(s);
  const auto traces = execute(s, in, in.index ? &*in.index : nullptr);
  jsonl::atomic_write(path, traces_to_jsonl(traces));
  std::size_t with_errors = 0;
  for (const auto& t : traces) with_errors += t.errors.empty() ? 0 : 1;
  out << "wrote " << traces.size() << " traces to " << path.string() << " (" << with_errors
      << " with errors)\n";
  return 0;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  if (!s.output.empty()) ensure_writable(s.output, s.force);
  const auto traces = load_traces(s.traces);
  const auto dataset = load_dataset(s.dataset);
  const EvalReport report = evaluate_batch(traces, dataset, s.eval_k);
  if (!s.output.empty()) jsonl::atomic_write(s.output, dump_report(report));
  out << format_report_table(report);
  return 0;
}

int cmd_report(const Settings& s, std::ostream& out) {
  json j;
  try {
    j = json::parse(jsonl::read_file(s.input));
  } catch (const json::parse_error& e) {
    throw ParseError(0, "report " + s.input + " is not valid JSON: " + e.what());
  }
  const EvalReport report = report_from_json(j);
  out << (s.format == "json" ? dump_report(report) : format_report_table(report));
  return 0;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string v; std::getline(ss, v, ',');) {
    if (!v.empty()) out.push_back(v);
  }
  if (out.empty()) throw UsageError("--values must list at least one value");
  return out;
}

std::string file_safe(std::string v) {
  for (char& c : v) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return v;
}

std::string csv_cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(17);
  os << *v;
  return os.str();
}

int cmd_sweep(const Settings& s, std::ostream& out) {
  const auto values = split_values(s.values);
  const fs::path dir(s.output);
  const fs::path csv_path = dir / "sweep.csv";
  ensure_writable(csv_path, s.force);
  fs::create_directories(dir);

  const RunInputs in = load_run_inputs(s);
  std::string csv = "axis,value,task,f1,d_f1,n\n";
  for (const auto& value : values) {
    Settings point = s;
    std::optional<VectorIndex> rebuilt;
    const VectorIndex* index = in.index ? &*in.index : nullptr;
    if (s.axis == "max_iterations" || s.axis == "retrieve_k") {
      std::size_t n = 0;
      try {
        n = std::stoul(value);
      } catch (const std::exception&) {
        throw UsageError("axis " + s.axis + " needs positive integers, got '" + value + "'");
      }
      if (n == 0) throw UsageError("axis " + s.axis + " needs positive integers");
      (s.axis == "max_iterations" ? point.max_iterations : point.k) = n;
    } else if (s.axis == "embedder") {
      point.embedder = value;
      auto embedder = make_embedder(value, s.dim, s.seed);
      rebuilt = build_index(in.corpus, *embedder);
      point.embedder = embedder->name();
      index = &*rebuilt;
    } else {
      point.filter_model = value;
    }
    const auto traces = execute(point, in, index);
    const EvalReport report = evaluate_batch(traces, in.dataset, s.eval_k);
    const std::string stem = "point_" + file_safe(value);
    for (const auto& p : {dir / (stem + ".traces.jsonl"), dir / (stem + ".report.json")}) {
      ensure_writable(p, s.force);
    }
    jsonl::atomic_write(dir / (stem + ".traces.jsonl"), traces_to_jsonl(traces));
    jsonl::atomic_write(dir / (stem + ".report.json"), dump_report(report));
    for (auto task : kAllTasks) {
      const auto& sc = report.per_task.at(task);
      csv += s.axis + "," + value + "," + std::string(to_string(task)) + "," + csv_cell(sc.f1) +
             "," + csv_cell(sc.d_f1) + "," + std::to_string(sc.n) + "\n";
    }
    csv += s.axis + "," + value + ",macro_avg," + csv_cell(report.macro_avg.f1) + "," +
           csv_cell(report.macro_avg.d_f1) + "," + std::to_string(report.macro_avg.n) + "\n";
    csv += s.axis + "," + value + ",micro_avg," + csv_cell(report.micro_avg.f1) + "," +
           csv_cell(report.micro_avg.d_f1) + "," + std::to_string(report.micro_avg.n) + "\n";
    out << s.axis << "=" << value << ": F1 " << csv_cell(report.macro_avg.f1) << ", D-F1@"
        << s.eval_k << " " << csv_cell(report.macro_avg.d_f1) << "\n";
  }
  jsonl::atomic_write(csv_path, csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  auto app = make_app(s);
  try {
    parse(*app, args);
    if (!s.config.empty()) {
      auto extra = config_args(*selected(*app), s.config);
      if (!extra.empty()) {
        std::vector<std::string> all = args;
        all.insert(all.end(), extra.begin(), extra.end());
        s = Settings{};
        app = make_app(s);
        parse(*app, all);
      }
    }
  } catch (const CLI::CallForHelp&) {
    out << app->help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  spdlog::set_level(spdlog::level::from_str(s.log_level));
  const std::string name = selected(*app)->get_name();
  try {
    if (name == "gen-corpus") return cmd_gen_corpus(s, out);
    if (name == "gen-dataset") return cmd_gen_dataset(s, out);
    if (name == "index") return cmd_index(s, out);
    if (name == "run") return cmd_run(s, out);
    if (name == "eval") return cmd_eval(s, out);
    if (name == "sweep") return cmd_sweep(s, out);
    if (name == "report") return cmd_report(s, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "usage error: unknown subcommand " << name << "\n";
  return 2;
}

}  // namespace globalrag::cli
