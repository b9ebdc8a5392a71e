#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "biasalert/backends.hpp"
#include "biasalert/csv.hpp"
#include "biasalert/detector.hpp"
#include "biasalert/error.hpp"
#include "biasalert/eval_harness.hpp"
#include "biasalert/gateway.hpp"
#include "biasalert/knowledge_db.hpp"
#include "biasalert/text.hpp"
#include "json_io.hpp"

namespace biasalert::cli {
namespace {

using json_io::json;

constexpr const char* kVersion = "0.1.0";

/// Bad invocation detected after parsing; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string config;
  std::string aliases;
  std::string templates;
  bool verbose = false;
};

struct BackendOpts {
  std::string backend = "mock";
  std::string judge_url;
  std::string judge_model = "biasalert";
  int retries = 2;
  int timeout_ms = 30000;
  bool no_jitter = false;
  int max_tokens = 256;
};

struct EmbedOpts {
  std::string embedder = "local";
  std::string embed_url;
  std::string embed_model;
};

struct PromptOpts {
  bool no_ra = false;
  bool no_cot = false;
  bool no_demo = false;
  std::size_t k = kDefaultTopK;

  PromptConfig config() const { return {!no_ra, !no_cot, !no_demo, k}; }
};

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config, "Flat key=value file; command-line flags override it");
  sub->add_option("--aliases", o.aliases, "Bias-type alias file (alias = canonical)");
  sub->add_option("--templates", o.templates, "Prompt template file (default: built in)");
  sub->add_flag("--verbose", o.verbose, "Progress and timing on stderr");
}

void add_backend(CLI::App* sub, BackendOpts& o) {
  sub->add_option("--backend", o.backend, "Judge backend")
      ->check(CLI::IsMember({"mock", "remote"}))
      ->capture_default_str();
  sub->add_option("--judge-url", o.judge_url, "Chat-completions URL of the judge (or BIASALERT_JUDGE_URL)");
  sub->add_option("--judge-model", o.judge_model, "Judge model name")->capture_default_str();
  sub->add_option("--retries", o.retries, "Retries per remote call")->capture_default_str();
  sub->add_option("--timeout-ms", o.timeout_ms, "Remote call timeout")->capture_default_str();
  sub->add_option("--max-tokens", o.max_tokens, "Judge max output tokens")->capture_default_str();
  sub->add_flag("--no-jitter", o.no_jitter, "Deterministic retry backoff");
}

void add_embed(CLI::App* sub, EmbedOpts& o) {
  sub->add_option("--embedder", o.embedder, "Embedder")
      ->check(CLI::IsMember({"local", "remote"}))
      ->capture_default_str();
  sub->add_option("--embed-url", o.embed_url, "Embeddings URL (or BIASALERT_EMBED_URL)");
  sub->add_option("--embed-model", o.embed_model, "Embedding model name (or BIASALERT_EMBED_MODEL)");
}

void add_prompt(CLI::App* sub, PromptOpts& o) {
  sub->add_flag("--no-ra", o.no_ra, "Disable retrieval augmentation");
  sub->add_flag("--no-cot", o.no_cot, "Disable step-by-step instructions");
  sub->add_flag("--no-demo", o.no_demo, "Disable the demonstration");
  sub->add_option("-k,--k", o.k, "References per prompt")->check(CLI::PositiveNumber)->capture_default_str();
}

RetryPolicy retry_policy(const BackendOpts& o) {
  RetryPolicy policy;
  policy.retries = o.retries;
  policy.jitter = !o.no_jitter;
  return policy;
}

AliasMap load_aliases(const CommonOpts& o) {
  return o.aliases.empty() ? AliasMap::defaults() : AliasMap::load(o.aliases);
}

std::shared_ptr<const TemplateSet> load_templates(const CommonOpts& o) {
  if (o.templates.empty()) return std::make_shared<const TemplateSet>(TemplateSet::builtin());
  return std::make_shared<const TemplateSet>(TemplateSet::load(o.templates));
}

RemoteChatConfig chat_config(const std::string& env_prefix, const std::string& url, const std::string& model,
                             const BackendOpts& o) {
  RemoteChatConfig cfg;
  cfg.model = model;
  cfg.apply_env(env_prefix);
  if (!url.empty()) cfg.url = url;
  if (!model.empty() && cfg.model.empty()) cfg.model = model;
  cfg.max_tokens = o.max_tokens;
  cfg.http.retry = retry_policy(o);
  cfg.http.timeout_ms = o.timeout_ms;
  if (cfg.url.empty()) throw UsageError("a URL is required (flag or " + env_prefix + "_URL)");
  return cfg;
}

JudgeFactory make_judge(const BackendOpts& o) {
  if (o.backend == "mock") return mock_judge_factory();
  return remote_judge_factory(chat_config("BIASALERT_JUDGE", o.judge_url, o.judge_model, o));
}

std::shared_ptr<const Embedder> make_embedder(const EmbedOpts& e, const BackendOpts& b) {
  if (e.embedder == "local") return std::make_shared<const LocalHashEmbedder>();
  RemoteEmbedderConfig cfg;
  cfg.url = e.embed_url;
  cfg.model = e.embed_model;
  if (const char* v = std::getenv("BIASALERT_EMBED_URL"); cfg.url.empty() && v) cfg.url = v;
  if (const char* v = std::getenv("BIASALERT_EMBED_MODEL"); cfg.model.empty() && v) cfg.model = v;
  if (const char* v = std::getenv("BIASALERT_EMBED_KEY"); v && *v) cfg.auth.header_value = std::string("Bearer ") + v;
  if (cfg.url.empty()) throw UsageError("remote embedder needs --embed-url or BIASALERT_EMBED_URL");
  cfg.retry = retry_policy(b);
  cfg.timeout_ms = b.timeout_ms;
  return std::make_shared<const RemoteEmbedder>(cfg);
}

DetectorSetup make_setup(const CommonOpts& c, const BackendOpts& b, const EmbedOpts& e, const PromptOpts& p,
                         const std::string& index_cache) {
  DetectorSetup setup;
  setup.embedder = make_embedder(e, b);
  setup.templates = load_templates(c);
  setup.aliases = load_aliases(c);
  setup.judge = make_judge(b);
  setup.prompt = p.config();
  setup.index_cache = index_cache;
  return setup;
}

// Resolved option values of a subcommand, for report headers.
json resolved_config(const CLI::App* sub) {
  json config = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    const bool is_flag = opt->get_expected_max() == 0;
    if (opt->count() > 0) {
      const auto results = opt->reduced_results();
      if (is_flag) {
        config[name] = opt->as<bool>();
      } else if (results.size() == 1) {
        config[name] = results.front();
      } else {
        config[name] = results;
      }
    } else if (is_flag) {
      config[name] = false;
    } else if (!opt->get_default_str().empty()) {
      config[name] = opt->get_default_str();
    } else {
      config[name] = nullptr;
    }
  }
  return config;
}

json header(const CLI::App* sub) {
  return {{"tool", "biasalert"},
          {"version", kVersion},
          {"subcommand", sub->get_name()},
          {"generated_at", utc_now()},
          {"config", resolved_config(sub)}};
}

void emit(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  file << doc.dump(2) << '\n';
  if (!file) throw IoError("write failed for " + path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  return file;
}

json counts_json(const KnowledgeBase& kb) {
  json counts = json::object();
  for (const auto type : kAllBiasTypes) counts[std::string(to_string(type))] = kb.count(type);
  return counts;
}

double percentile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

/// Echoes the prompt back; a stand-in upstream for trying the gateway.
class EchoBackend final : public GenerationBackend {
 public:
  std::string generate(const GenerationRequest& request) const override { return request.prompt; }
  std::string name() const override { return "echo"; }
};

// Reads `--config` and splices its entries in front of the user's own flags.
std::vector<std::string> with_config(const std::vector<std::string>& args, const CLI::App& app) {
  std::optional<std::size_t> sub_pos;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (!sub_pos && !a.starts_with("-")) {
      for (const CLI::App* sub : app.get_subcommands({})) {
        if (sub->get_name() == a) sub_pos = i;
      }
    }
    if (a == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (a.starts_with("--config=")) config_path = a.substr(9);
  }
  if (config_path.empty() || !sub_pos) return args;

  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open config file " + config_path);
  const CLI::App* sub = app.get_subcommand_no_throw(args[*sub_pos]);
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError(config_path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(text::trim(trimmed.substr(0, eq)));
    const std::string value(text::trim(trimmed.substr(eq + 1)));
    if (key.empty() || key == "config") continue;
    if (sub->get_option_no_throw("--" + key) == nullptr) continue;  // meant for another subcommand
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(*sub_pos) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(*sub_pos) + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"biasalert: retrieval-augmented social bias detection", "biasalert"};
  app.option_defaults()->take_last();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts common;
  BackendOpts backend;
  EmbedOpts embed;
  PromptOpts prompt;

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Build or extend a knowledge-base file from a raw CSV corpus");
  std::string in_path, out_path, append_to, report_path;
  std::string statement_col = "statement", type_col = "type_label";
  bool no_header = false;
  add_common(ingest_cmd, common);
  ingest_cmd->add_option("--input", in_path, "Raw CSV (statement,type_label)")->required();
  ingest_cmd->add_option("--output", out_path, "Knowledge-base file to write")->required();
  ingest_cmd->add_option("--append-to", append_to, "Existing knowledge base to extend");
  ingest_cmd->add_flag("--no-header", no_header, "CSV has no header row; columns are indices");
  ingest_cmd->add_option("--statement-column", statement_col, "Statement column")->capture_default_str();
  ingest_cmd->add_option("--type-column", type_col, "Bias-type column")->capture_default_str();
  ingest_cmd->add_option("--report", report_path, "Write the ingest report here instead of stdout");

  // index
  auto* index_cmd = app.add_subcommand("index", "Embed a knowledge base into an index cache");
  std::string kb_path;
  add_common(index_cmd, common);
  add_embed(index_cmd, embed);
  add_backend(index_cmd, backend);
  index_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  index_cmd->add_option("--output", out_path, "Index cache to write")->required();

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Judge one sentence");
  std::string text_arg, index_cache, format = "json";
  bool show_prompt = false;
  add_common(detect_cmd, common);
  add_backend(detect_cmd, backend);
  add_embed(detect_cmd, embed);
  add_prompt(detect_cmd, prompt);
  detect_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  detect_cmd->add_option("--text", text_arg, "Sentence to judge")->required();
  detect_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  detect_cmd->add_flag("--show-prompt", show_prompt, "Include the assembled prompt");
  detect_cmd->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // traindata
  auto* train_cmd = app.add_subcommand("traindata", "Export instruction-tuning records for a labeled set");
  std::string labeled_path;
  add_common(train_cmd, common);
  add_embed(train_cmd, embed);
  add_backend(train_cmd, backend);
  add_prompt(train_cmd, prompt);
  train_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  train_cmd->add_option("--labeled", labeled_path, "Labeled JSON-lines file")->required();
  train_cmd->add_option("--output", out_path, "Training-records JSON-lines file")->required();
  train_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  train_cmd->add_option("--report", report_path, "Write the summary here instead of stdout");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score the judge on a labeled set");
  std::string items_path;
  std::size_t concurrency = 4;
  add_common(eval_cmd, common);
  add_backend(eval_cmd, backend);
  add_embed(eval_cmd, embed);
  add_prompt(eval_cmd, prompt);
  eval_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  eval_cmd->add_option("--labeled", labeled_path, "Labeled JSON-lines file")->required();
  eval_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  eval_cmd->add_option("--report", report_path, "Metrics JSON (default stdout)");
  eval_cmd->add_option("--items", items_path, "Per-item CSV");
  eval_cmd->add_option("--concurrency", concurrency, "Concurrent judge calls")->capture_default_str();
  eval_cmd->add_option("--format", format, "Stdout format: metrics JSON or per-item CSV")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // gen-eval
  auto* gen_cmd = app.add_subcommand("gen-eval", "Bias level of a model's generations on a task set");
  std::string tasks_path, replay_path, gen_url, gen_model;
  add_common(gen_cmd, common);
  add_backend(gen_cmd, backend);
  add_embed(gen_cmd, embed);
  add_prompt(gen_cmd, prompt);
  gen_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  gen_cmd->add_option("--tasks", tasks_path, "Generation tasks JSON-lines file")->required();
  gen_cmd->add_option("--replay", replay_path, "Canned responses {id, response}");
  gen_cmd->add_option("--gen-url", gen_url, "Chat-completions URL of the model under test (or BIASALERT_GEN_URL)");
  gen_cmd->add_option("--gen-model", gen_model, "Model under test");
  gen_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  gen_cmd->add_option("--report", report_path, "Report JSON (default stdout)");
  gen_cmd->add_option("--concurrency", concurrency, "Concurrent calls")->capture_default_str();

  // import-labeled
  auto* import_cmd = app.add_subcommand("import-labeled", "Convert a labeled CSV into the canonical JSON-lines format");
  LabeledColumnMapping mapping;
  add_common(import_cmd, common);
  import_cmd->add_option("--input", in_path, "Labeled CSV")->required();
  import_cmd->add_option("--output", out_path, "Canonical labeled JSON-lines file")->required();
  import_cmd->add_flag("--no-header", no_header, "CSV has no header row; columns are indices");
  import_cmd->add_option("--id-column", mapping.id_column, "Id column (default: row-<line>)");
  import_cmd->add_option("--text-column", mapping.text_column, "Sentence column")->capture_default_str();
  import_cmd->add_option("--biased-column", mapping.biased_column, "Biased flag column")->capture_default_str();
  import_cmd->add_option("--type-column", mapping.type_column, "Bias-type column");
  import_cmd->add_option("--group-column", mapping.group_column, "Social-group column");
  import_cmd->add_option("--attribute-column", mapping.attribute_column, "Attribute column");
  import_cmd->add_option("--report", report_path, "Write the import summary here instead of stdout");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the moderation gateway");
  GatewayConfig gateway;
  std::string audit_log_path, upstream_url, upstream_model, upstream_replay;
  bool fail_open = false, upstream_echo = false;
  add_common(serve_cmd, common);
  add_backend(serve_cmd, backend);
  add_embed(serve_cmd, embed);
  add_prompt(serve_cmd, prompt);
  serve_cmd->add_option("--kb", kb_path, "Knowledge-base file (or BIASALERT_KB_PATH)");
  serve_cmd->add_option("--host", gateway.host, "Listen host")->capture_default_str();
  serve_cmd->add_option("--port", gateway.port, "Listen port (0: any)")->capture_default_str();
  serve_cmd->add_option("--workers", gateway.worker_threads, "Concurrent request cap")->capture_default_str();
  serve_cmd->add_option("--audit-log", audit_log_path, "Append audit records (JSON lines) here");
  serve_cmd->add_option("--block-message", gateway.block_message, "Text returned for blocked responses");
  serve_cmd->add_flag("--audit-only", gateway.audit_only, "Flag biased responses instead of blocking");
  serve_cmd->add_flag("--fail-open", fail_open, "Release unaudited text when the judge is down");
  serve_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  serve_cmd->add_option("--upstream-url", upstream_url, "Chat-completions URL of the upstream model (or BIASALERT_UPSTREAM_URL)");
  serve_cmd->add_option("--upstream-model", upstream_model, "Upstream model name");
  serve_cmd->add_option("--upstream-replay", upstream_replay, "Canned upstream responses keyed by request id");
  serve_cmd->add_flag("--upstream-echo", upstream_echo, "Upstream echoes the prompt (for trying the gateway)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Detection latency percentiles");
  std::size_t bench_n = 200;
  add_common(bench_cmd, common);
  add_backend(bench_cmd, backend);
  add_embed(bench_cmd, embed);
  add_prompt(bench_cmd, prompt);
  bench_cmd->add_option("--kb", kb_path, "Knowledge-base file")->required();
  bench_cmd->add_option("-n,--n", bench_n, "Detections to time")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--text", text_arg, "Sentence to judge (default: cycle through KB statements)");
  bench_cmd->add_option("--input", in_path, "File with one sentence per line");
  bench_cmd->add_option("--index-cache", index_cache, "Index cache (built when stale)");
  bench_cmd->add_option("--report", report_path, "Report JSON (default stdout)");

  const auto usage_for = [&]() -> std::string {
    for (const CLI::App* sub : app.get_subcommands()) return sub->help();
    return app.help();
  };

  try {
    std::vector<std::string> args = with_config(raw_args, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << usage_for();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << usage_for();
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  const auto started = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  };

  try {
    if (sub == ingest_cmd) {
      const AliasMap aliases = load_aliases(common);
      RawCsvMapping m{!no_header, statement_col, type_col};
      const auto records = read_raw_csv(std::filesystem::path(in_path), m);
      IngestResult result = append_to.empty() ? ingest(records, aliases)
                                              : append(load(append_to), records, aliases);
      save(result.kb, out_path);
      emit({{"header", header(sub)},
            {"kb_version", result.kb.version()},
            {"entries", result.kb.size()},
            {"counts_by_type", counts_json(result.kb)},
            {"ingest", json_io::to_json(result.report)}},
           report_path, out);

    } else if (sub == index_cmd) {
      const KnowledgeBase kb = load(kb_path);
      const auto embedder = make_embedder(embed, backend);
      const RetrievalIndex index = build_index(kb, *embedder);
      save_index(index, out_path);
      emit({{"header", header(sub)},
            {"kb_version", index.kb_version()},
            {"entries", index.size()},
            {"embedder", index.embedder_id()},
            {"dimension", index.dimension()}},
           "", out);

    } else if (sub == detect_cmd) {
      const auto ctx = build_context(std::make_shared<const KnowledgeBase>(load(kb_path)),
                                     make_setup(common, backend, embed, prompt, index_cache));
      const DetectionResult result = detect(text_arg, *ctx);
      if (format == "csv") {
        const Verdict& v = result.verdict;
        out << "usable,biased,bias_type,group,attribute\n"
            << (v.usable ? 1 : 0) << ',' << (v.biased ? 1 : 0) << ','
            << (v.bias_type ? to_string(*v.bias_type) : std::string_view{}) << ','
            << csv_escape(v.group.value_or("")) << ',' << csv_escape(v.attribute.value_or("")) << '\n';
      } else {
        json refs = json::array();
        for (const auto& r : result.references) refs.push_back(json_io::to_json(r));
        json doc{{"header", header(sub)},
                 {"kb_version", ctx->kb->version()},
                 {"verdict", json_io::to_json(result.verdict)},
                 {"references", std::move(refs)},
                 {"completion", result.completion}};
        if (show_prompt) doc["prompt"] = json_io::to_json(result.prompt);
        emit(doc, "", out);
      }
      if (common.verbose) err << "detect: " << result.latency_ms << " ms\n";

    } else if (sub == train_cmd) {
      const KnowledgeBase kb = load(kb_path);
      const auto embedder = make_embedder(embed, backend);
      const RetrievalIndex index = load_or_build_index(kb, *embedder, index_cache);
      const auto examples = load_labeled(labeled_path, load_aliases(common));
      const auto templates = load_templates(common);
      const TrainingData data =
          build_training_records(examples, kb, index, *embedder, prompt.config(), *templates);
      auto file = open_out(out_path);
      write_training_records(data.records, file);
      if (!file) throw IoError("write failed for " + out_path);
      json failures = json::array();
      for (const auto& f : data.failures) failures.push_back({{"id", f.example_id}, {"reason", f.reason}});
      emit({{"header", header(sub)},
            {"examples", examples.size()},
            {"records", data.records.size()},
            {"failures", std::move(failures)}},
           report_path, out);

    } else if (sub == eval_cmd) {
      const DetectorSetup setup = make_setup(common, backend, embed, prompt, index_cache);
      const auto examples = load_labeled(labeled_path, setup.aliases);
      const auto ctx = build_context(std::make_shared<const KnowledgeBase>(load(kb_path)), setup);
      const LabeledEvaluation eval = evaluate_labeled(examples, *ctx, concurrency);
      if (!items_path.empty()) {
        auto file = open_out(items_path);
        write_items_csv(eval.items, file);
      }
      json head = header(sub);
      head["mean_latency_ms"] = eval.mean_latency_ms;
      head["elapsed_ms"] = elapsed_ms();
      const json doc{{"header", std::move(head)},
                     {"kb_version", ctx->kb->version()},
                     {"judge", ctx->judge->name()},
                     {"backend_errors", eval.backend_errors},
                     {"metrics", json_io::to_json(eval.metrics)}};
      if (format == "csv" && report_path.empty()) {
        write_items_csv(eval.items, out);
      } else {
        emit(doc, report_path, out);
      }

    } else if (sub == gen_cmd) {
      const DetectorSetup setup = make_setup(common, backend, embed, prompt, index_cache);
      const auto tasks = load_generation_tasks(tasks_path);
      std::unique_ptr<GenerationBackend> generator;
      if (!replay_path.empty()) {
        generator = std::make_unique<ReplayGenerationBackend>(ReplayGenerationBackend::load(replay_path));
      } else {
        generator = std::make_unique<RemoteGenerationBackend>(
            chat_config("BIASALERT_GEN", gen_url, gen_model, backend));
      }
      const auto ctx = build_context(std::make_shared<const KnowledgeBase>(load(kb_path)), setup);
      const BiasLevelReport report = evaluate_generation(tasks, *generator, *ctx, concurrency);
      json head = header(sub);
      head["elapsed_ms"] = elapsed_ms();
      emit({{"header", std::move(head)}, {"report", json::parse(bias_level_to_json(report))}}, report_path, out);

    } else if (sub == import_cmd) {
      mapping.has_header = !no_header;
      const ImportResult result = import_labeled(std::filesystem::path(in_path), mapping, load_aliases(common));
      save_labeled(result.examples, out_path);
      json issues = json::array();
      for (const auto& i : result.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
      emit({{"header", header(sub)}, {"imported", result.examples.size()}, {"issues", std::move(issues)}},
           report_path, out);

    } else if (sub == serve_cmd) {
      const bool host_given = serve_cmd->get_option("--host")->count() > 0;
      const bool port_given = serve_cmd->get_option("--port")->count() > 0;
      GatewayConfig cfg = gateway;
      cfg.apply_env();
      if (host_given) cfg.host = gateway.host;
      if (port_given) cfg.port = gateway.port;
      if (!kb_path.empty()) cfg.kb_path = kb_path;
      if (cfg.kb_path.empty()) throw UsageError("serve needs --kb or BIASALERT_KB_PATH");
      cfg.audit_log = audit_log_path;
      cfg.judge_failure = fail_open ? JudgeFailurePolicy::fail_open : JudgeFailurePolicy::fail_closed;
      cfg.aliases = load_aliases(common);

      std::shared_ptr<const GenerationBackend> upstream;
      if (upstream_echo) {
        upstream = std::make_shared<const EchoBackend>();
      } else if (!upstream_replay.empty()) {
        upstream = std::make_shared<const ReplayGenerationBackend>(ReplayGenerationBackend::load(upstream_replay));
      } else {
        upstream = std::make_shared<const RemoteGenerationBackend>(
            chat_config("BIASALERT_UPSTREAM", upstream_url, upstream_model, backend));
      }

      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      Gateway server(cfg, make_setup(common, backend, embed, prompt, index_cache),
                     std::make_shared<const KnowledgeBase>(load(cfg.kb_path)), upstream);
      server.start();
      err << "biasalert gateway listening on " << cfg.host << ':' << server.port() << std::endl;
      int received = 0;
      sigwait(&signals, &received);
      server.stop();
      const auto c = server.audit_log().counters();
      err << "stopped after " << c.requests << " requests (" << c.blocked << " blocked)" << std::endl;

    } else if (sub == bench_cmd) {
      const auto ctx = build_context(std::make_shared<const KnowledgeBase>(load(kb_path)),
                                     make_setup(common, backend, embed, prompt, index_cache));
      std::vector<std::string> texts;
      if (!text_arg.empty()) texts.push_back(text_arg);
      if (!in_path.empty()) {
        std::ifstream in(in_path);
        if (!in) throw IoError("cannot open " + in_path);
        for (std::string line; std::getline(in, line);) {
          if (!text::trim(line).empty()) texts.push_back(line);
        }
      }
      if (texts.empty()) {
        for (const auto& e : ctx->kb->entries()) {
          texts.push_back("they say " + e.statement);
          if (texts.size() >= 100) break;
        }
      }
      if (texts.empty()) texts.push_back("the sky is blue");
      std::vector<double> latencies;
      latencies.reserve(bench_n);
      for (std::size_t i = 0; i < bench_n; ++i) latencies.push_back(detect(texts[i % texts.size()], *ctx).latency_ms);
      double sum = 0.0;
      for (const double l : latencies) sum += l;
      std::sort(latencies.begin(), latencies.end());
      emit({{"header", header(sub)},
            {"n", bench_n},
            {"judge", ctx->judge->name()},
            {"kb_entries", ctx->kb->size()},
            {"latency_ms",
             {{"mean", sum / static_cast<double>(latencies.size())},
              {"min", latencies.front()},
              {"p50", percentile(latencies, 0.50)},
              {"p90", percentile(latencies, 0.90)},
              {"p99", percentile(latencies, 0.99)},
              {"max", latencies.back()}}}},
           report_path, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (common.verbose) err << sub->get_name() << ": " << elapsed_ms() << " ms\n";
  return 0;
}

}  // namespace biasalert::cli
