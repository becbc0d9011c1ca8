// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every command reads its input line by line, handles
// lines independently (line i draws from Rng(derive_seed(seed, i))) and writes
// results in input order, so --parallel never changes the output bytes.
//
// Exit codes: 0 ok, 2 input or format error, 3 infeasible request,
// 4 scorer transport failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stoktok/stoktok.hpp"

namespace {

using namespace stoktok;
using ojson = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct Options {
  std::string vocab_path;
  std::string merges_path;
  std::string input = "-";
  std::string output = "-";
  std::optional<std::uint64_t> seed;
  std::size_t parallel = 1;
  bool pretokenise = false;

  // sampler
  std::string scheme = "canonical";
  double alpha = 0.0;
  std::size_t k = 0;
  double p_drop = 0.0;
  std::optional<std::size_t> k_max;
  std::string arity = "2";
  std::string tree_mode = "all";
  bool retry = false;
  bool strict_k = false;
  std::size_t draws = 1;

  // enumerate / count / splitdist / histogram
  std::size_t limit = 1000;
  bool allow_long = false;
  std::optional<std::size_t> layer;
  std::optional<std::size_t> layers;
  std::vector<std::size_t> totals;
  std::string weight = "splits";
  std::string reference;
  bool reference_uniform = false;
  std::string format = "json";

  // attack
  std::string dataset;
  std::string scorer = "toy:constant";
  std::uint64_t scorer_seed = 0;
  std::size_t steps = 10;
  std::size_t radius = 2;
  std::string init = "canonical";
  double lp_lambda = 1.0;
  double lp_threshold = 16.0;
  std::size_t avg_draws = 0;
};

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

std::string read_all(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Lines without their terminators; a trailing newline does not start a line.
std::vector<std::string> split_lines(const std::string& data) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < data.size()) {
    const std::size_t nl = data.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(data.substr(start));
      break;
    }
    lines.push_back(data.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw InputError("cannot open output " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string line_error(std::size_t i, const std::string& what) {
  return "line " + std::to_string(i + 1) + ": " + what;
}

// Runs f over every line on `parallel` workers and writes the results in
// order. Errors keep their type and gain the line number.
template <class F>
void map_lines(const std::vector<std::string>& lines, std::size_t parallel, std::ostream& out, F&& f) {
  std::vector<std::string> results(lines.size());
  detail::parallel_for(lines.size(), parallel, [&](std::size_t i) {
    try {
      results[i] = f(i, lines[i]);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(line_error(i, e.what()));
    } catch (const TransportError& e) {
      throw TransportError(line_error(i, e.what()));
    } catch (const InputError& e) {
      throw InputError(line_error(i, e.what()));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(line_error(i, e.what()));
    }
  });
  for (const auto& r : results) out << r;
}

std::string jsonl(const ojson& j) { return j.dump() + "\n"; }

ojson header(std::size_t line) {
  ojson j;
  j["v"] = kSchemaVersion;
  j["line"] = line;
  return j;
}

std::string big(const BigInt& x) { return x.str(); }

std::string rational_text(const Rational& r) {
  const BigInt n = boost::multiprecision::numerator(r);
  const BigInt d = boost::multiprecision::denominator(r);
  return d == 1 ? n.str() : n.str() + "/" + d.str();
}

std::vector<TokenId> ids_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("token ids must be a JSON array");
  std::vector<TokenId> ids;
  for (const auto& x : j) {
    if (!x.is_number_unsigned()) throw InputError("token ids must be non-negative integers");
    ids.push_back(x.get<TokenId>());
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Option interpretation
// ---------------------------------------------------------------------------

std::uint64_t parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos, 0);
    if (pos != s.size() || s.find('-') != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw InputError(std::string(what) + " is not a 64-bit unsigned integer: " + s);
  }
}

// --seed, else STOKTOK_SEED, else an error when randomness is needed.
std::uint64_t resolve_seed(const Options& o, bool needed) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("STOKTOK_SEED"); env && *env) return parse_u64(env, "STOKTOK_SEED");
  if (needed) throw InputError("a seed is required: pass --seed or set STOKTOK_SEED");
  return 0;
}

SamplerSpec sampler_spec(const Options& o) {
  std::map<std::string, std::string> kv{{"scheme", o.scheme},
                                        {"alpha", std::to_string(o.alpha)},
                                        {"k", std::to_string(o.k)},
                                        {"p_drop", std::to_string(o.p_drop)},
                                        {"arity", o.arity},
                                        {"tree_mode", o.tree_mode},
                                        {"retry", o.retry ? "true" : "false"}};
  SamplerSpec s = SamplerSpec::from_kv(kv);
  // from_kv goes through text; keep the exact doubles.
  s.alpha = o.alpha;
  s.p_drop = o.p_drop;
  s.k_max = o.k_max;
  s.validate();
  return s;
}

TreeMode tree_mode(const Options& o) { return SamplerSpec::from_kv({{"tree_mode", o.tree_mode}}).tree_mode; }

Vocabulary load(const Options& o) {
  if (o.vocab_path.empty()) throw InputError("--vocab is required");
  return load_vocabulary(o.vocab_path, o.merges_path);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_encode(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    const TokenSeq s = encode_canonical(line, vocab, o.pretokenise);
    ojson j = header(i);
    j["ids"] = s.ids;
    ojson tokens = ojson::array();
    for (TokenId id : s.ids) tokens.push_back(escape_bytes(vocab.bytes(id)));
    j["tokens"] = std::move(tokens);
    return jsonl(j);
  });
}

void cmd_decode(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t, const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    const auto ids = ids_from_json(j.is_object() ? j.at("ids") : j);
    return decode_ids(ids, vocab) + "\n";
  });
}

ojson sample_record(std::size_t line, const SamplerSpec& spec, const SampleResult& r) {
  ojson j = header(line);
  j["scheme"] = std::string(scheme_name(spec.scheme));
  j["ids"] = r.tokens.ids;
  try {
    j["splits"] = split_count_vector(r.canonical, r.tokens).counts;
  } catch (const BoundaryCrossingError&) {
    j["splits"] = nullptr;
  }
  j["alpha_realised"] =
      r.canonical.empty() ? 0.0 : normalised_splits(r.tokens, r.canonical, true).convert_to<double>();
  if (r.k_used) j["k_used"] = *r.k_used;
  if (r.uni) {
    j["splits_drawn"] = r.uni->drawn.counts;
    j["splits_adjusted"] = r.uni->adjusted;
  }
  return j;
}

void cmd_sample(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  const SamplingContext ctx(vocab, o.pretokenise);
  const SamplerSpec spec = sampler_spec(o);
  const std::uint64_t seed = resolve_seed(o, spec.scheme != Scheme::canonical);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    Rng rng(derive_seed(seed, i));
    std::string text;
    for (std::size_t d = 0; d < o.draws; ++d) {
      SampleResult r = sample(line, spec, ctx, rng);
      if (o.strict_k && r.k_used && *r.k_used != spec.k) {
        throw InfeasibleError("no tokenisation at distance " + std::to_string(spec.k));
      }
      text += jsonl(sample_record(i, spec, r));
    }
    return text;
  });
}

void cmd_count(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    const Boundaries b = make_boundaries(line, o.pretokenise);
    ojson j = header(i);
    j["count"] = big(count_tokenisations(line, vocab, &b));
    if (o.layers) {
      const TokenSeq c = encode_canonical(line, vocab, o.pretokenise);
      DistanceDag dag(line, c, *o.layers, vocab, &b);
      ojson layers = ojson::array();
      for (const auto& n : dag.counts()) layers.push_back(big(n));
      j["layers"] = std::move(layers);
    }
    return jsonl(j);
  });
}

void cmd_enumerate(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    const Boundaries b = make_boundaries(line, o.pretokenise);
    std::vector<TokenSeq> all;
    BigInt total;
    if (o.layer) {
      if (line.size() > kEnumerateGuardBytes && !o.allow_long) {
        throw InputError("input longer than " + std::to_string(kEnumerateGuardBytes) + " bytes; pass --allow-long");
      }
      const TokenSeq c = encode_canonical(line, vocab, o.pretokenise);
      DistanceDag dag(line, c, *o.layer, vocab, &b);
      total = dag.count(*o.layer);
      all = dag.enumerate(*o.layer, o.limit);
    } else {
      total = count_tokenisations(line, vocab, &b);
      all = enumerate_all(line, vocab, o.limit, o.allow_long, &b);
    }
    ojson j = header(i);
    if (o.layer) j["distance"] = *o.layer;
    j["count"] = big(total);
    ojson list = ojson::array();
    for (const auto& s : all) list.push_back(s.ids);
    j["tokenisations"] = std::move(list);
    j["truncated"] = BigInt(all.size()) < total;
    return jsonl(j);
  });
}

void cmd_distance(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object() || !j.contains("to")) throw InputError("expected {\"to\": [ids]} with optional \"from\"");
    const TokenSeq to = make_token_seq(ids_from_json(j["to"]), vocab);
    const std::string text = decode(to, vocab);
    const TokenSeq from =
        j.contains("from") ? make_token_seq(ids_from_json(j["from"]), vocab) : encode_canonical(text, vocab, o.pretokenise);
    ojson r = header(i);
    r["from"] = from.ids;
    r["to"] = to.ids;
    r["distance"] = token_edit_distance(from, to, vocab);
    r["span_distance"] = span_match_distance(from, to, vocab);
    return jsonl(r);
  });
}

void cmd_splitdist(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  const SamplingContext ctx(vocab, o.pretokenise);
  SplitWeight weight;
  if (o.weight == "splits") weight = SplitWeight::splits;
  else if (o.weight == "distance") weight = SplitWeight::distance;
  else throw InputError("--weight must be splits or distance");
  const TreeMode mode = tree_mode(o);
  map_lines(split_lines(read_all(o.input)), o.parallel, out, [&](std::size_t i, const std::string& line) {
    const TokenSeq c = encode_canonical(line, vocab, o.pretokenise);
    const SplitDistribution d = split_count_polynomials(c, ctx, weight, mode);
    ojson j = header(i);
    j["canonical"] = c.ids;
    j["weight"] = o.weight;
    ojson poly = ojson::array();
    for (const auto& coef : d.product) poly.push_back(big(coef));
    j["polynomial"] = std::move(poly);
    std::vector<std::size_t> ks = o.totals;
    if (ks.empty()) {
      for (std::size_t k = 0; k < d.product.size(); ++k) {
        if (d.product[k] != 0) ks.push_back(k);
      }
    }
    ojson conds = ojson::array();
    for (std::size_t k : ks) {
      ojson entry;
      entry["k"] = k;
      entry["count"] = big(d.coefficient(k));
      ojson tokens = ojson::array();
      for (std::size_t t = 0; t < c.size(); ++t) {
        const auto pmf = d.conditional(t, k);
        ojson row;
        row["token"] = t;
        if (!pmf) {
          row["pmf"] = nullptr;
        } else {
          ojson approx = ojson::array(), exact = ojson::array();
          for (const auto& p : *pmf) {
            approx.push_back(p.convert_to<double>());
            exact.push_back(rational_text(p));
          }
          row["pmf"] = std::move(approx);
          row["exact"] = std::move(exact);
        }
        if (weight == SplitWeight::splits) {
          ojson dm = ojson::array();
          for (std::size_t s = 0; s <= k; ++s) dm.push_back(dirmult_marginal_pmf(s, k, c.size()).convert_to<double>());
          row["dirmult"] = std::move(dm);
        }
        tokens.push_back(std::move(row));
      }
      entry["tokens"] = std::move(tokens);
      entry["feasible"] = d.coefficient(k) != 0;
      conds.push_back(std::move(entry));
    }
    j["conditionals"] = std::move(conds);
    return jsonl(j);
  });
}

// Draws are taken in fixed-size chunks, each from its own derived generator,
// so the histogram does not depend on how chunks are scheduled.
constexpr std::size_t kHistogramChunk = 4096;

void cmd_histogram(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  const SamplingContext ctx(vocab, o.pretokenise);
  const SamplerSpec spec = sampler_spec(o);
  const std::uint64_t seed = resolve_seed(o, spec.scheme != Scheme::canonical);
  if (o.draws == 0) throw InputError("--draws must be positive");
  if (o.format != "json" && o.format != "csv") throw InputError("--format must be json or csv");
  std::optional<Pmf> fixed_ref;
  if (!o.reference.empty()) fixed_ref = pmf_from_json(nlohmann::json::parse(read_all(o.reference)));
  const auto lines = split_lines(read_all(o.input));
  if (o.format == "csv") out << "line,outcome,count,probability\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::size_t chunks = (o.draws + kHistogramChunk - 1) / kHistogramChunk;
    std::vector<Histogram> parts(chunks);
    const std::uint64_t line_seed = derive_seed(seed, i);
    detail::parallel_for(chunks, o.parallel, [&](std::size_t c) {
      Rng rng(derive_seed(line_seed, c));
      const std::size_t n = std::min(kHistogramChunk, o.draws - c * kHistogramChunk);
      for (std::size_t d = 0; d < n; ++d) parts[c].add(sample(line, spec, ctx, rng).tokens);
    });
    Histogram h;
    for (const auto& p : parts) h.merge(p);
    if (o.format == "csv") {
      for (const auto& [k, c] : h.counts) {
        out << i << ',' << k << ',' << c << ',' << ojson(static_cast<double>(c) / static_cast<double>(h.total)).dump()
            << '\n';
      }
      continue;
    }
    std::optional<Pmf> ref = fixed_ref;
    if (o.reference_uniform) {
      const Boundaries b = make_boundaries(line, o.pretokenise);
      std::vector<std::string> support;
      for (const auto& s : enumerate_all(line, vocab, std::numeric_limits<std::size_t>::max(), o.allow_long, &b)) {
        support.push_back(serialise_ids(s.ids));
      }
      ref = uniform_pmf(support);
    }
    ojson j = header(i);
    j["scheme"] = std::string(scheme_name(spec.scheme));
    j["draws"] = h.total;
    j["support"] = h.counts.size();
    ojson counts = ojson::object(), pmf = ojson::object();
    for (const auto& [k, c] : h.counts) {
      counts[k] = c;
      pmf[k] = static_cast<double>(c) / static_cast<double>(h.total);
    }
    j["counts"] = std::move(counts);
    j["pmf"] = std::move(pmf);
    if (ref) {
      j["tv"] = tv_distance(h, *ref);
      const ChiSquareResult chi = chi_square_test(h, *ref);
      j["chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
    }
    out << jsonl(j);
  }
}

std::unique_ptr<Scorer> make_scorer(const Options& o, const std::vector<McqInstance>& data, const Vocabulary& vocab) {
  constexpr std::string_view toy = "toy:", proto = "proto:";
  const std::string_view s = o.scorer;
  if (s.substr(0, toy.size()) == toy) {
    const ToyScorerKind kind = parse_toy_kind(s.substr(toy.size()));
    ToyScorerOptions opts;
    opts.lambda = o.lp_lambda;
    opts.threshold = o.lp_threshold;
    // The length-penalty landscape favours each instance's true answer.
    for (const auto& inst : data) opts.favoured.insert(encode_canonical(inst.options.at(inst.label), vocab).ids);
    return toy_scorer(kind, o.scorer_seed, opts);
  }
  if (s.substr(0, proto.size()) == proto) return connect_scorer(s.substr(proto.size()));
  throw InputError("--scorer must be toy:<kind> or proto:<command|tcp://host:port>");
}

void cmd_attack(const Options& o, std::ostream& out) {
  const Vocabulary vocab = load(o);
  std::vector<McqInstance> data;
  {
    std::istringstream in(read_all(o.dataset.empty() ? o.input : o.dataset));
    data = load_dataset(in);
  }
  if (data.empty()) throw InputError("dataset is empty");
  AttackConfig cfg;
  cfg.max_steps = o.steps;
  cfg.radius = o.radius;
  if (o.init == "canonical") cfg.init = AttackInit::canonical;
  else if (o.init == "uniform-random") cfg.init = AttackInit::uniform_random;
  else throw InputError("--init must be canonical or uniform-random");
  const bool stochastic = cfg.init == AttackInit::uniform_random || (o.avg_draws > 0 && o.scheme != "canonical");
  cfg.seed = resolve_seed(o, stochastic);
  cfg.validate();

  auto scorer = make_scorer(o, data, vocab);
  const AdversarialSummary summary = adversarial_accuracy(*scorer, data, cfg, vocab, o.parallel);
  for (std::size_t n = 0; n < summary.results.size(); ++n) {
    const AttackResult& r = summary.results[n];
    ojson j;
    j["v"] = kSchemaVersion;
    j["instance"] = n;
    j["start"] = r.start.ids;
    j["final"] = r.final_tokens.ids;
    j["margins"] = r.margins;
    j["iterations"] = r.iterations;
    j["clean_correct"] = r.clean_correct;
    j["final_correct"] = r.final_correct;
    j["success"] = r.success;
    j["distance_from_start"] = r.distance_from_start;
    j["distance_from_canonical"] = r.distance_from_canonical;
    out << jsonl(j);
  }
  ojson s;
  s["v"] = kSchemaVersion;
  s["summary"] = {{"instances", data.size()},
                  {"clean_accuracy", summary.clean},
                  {"adversarial_accuracy", summary.adversarial},
                  {"steps", cfg.max_steps},
                  {"radius", cfg.radius},
                  {"init", o.init}};
  if (o.avg_draws > 0) {
    const SamplingContext ctx(vocab, o.pretokenise);
    const SamplerSpec spec = sampler_spec(o);
    s["summary"]["avg_accuracy"] = avg_accuracy(*scorer, data, spec, o.avg_draws, ctx, cfg.seed, o.parallel);
    s["summary"]["avg_scheme"] = std::string(scheme_name(spec.scheme));
  }
  out << jsonl(s);
  std::cerr << "clean accuracy " << summary.clean << ", adversarial accuracy " << summary.adversarial << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic and adversarial tokenisation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;

  std::string seed_text;
  app.add_option("--vocab", o.vocab_path, "vocab.json: byte-escaped token string -> id")->group("Vocabulary");
  app.add_option("--merges", o.merges_path, "merges.txt: one 'LEFT RIGHT' per line, priority order")
      ->group("Vocabulary");
  app.add_flag("--pretokenise", o.pretokenise, "never let tokens cross whitespace-started chunks")->group("Vocabulary");
  app.add_option("--input,-i", o.input, "input file, '-' for stdin")->group("I/O");
  app.add_option("--output,-o", o.output, "output file, '-' for stdout")->group("I/O");
  app.add_option("--seed", seed_text, "64-bit seed (falls back to STOKTOK_SEED)")->group("I/O");
  app.add_option("--parallel,-j", o.parallel, "worker threads")->check(CLI::PositiveNumber)->group("I/O");

  app.add_option("--scheme", o.scheme, "canonical|stochastok|stochastok-uni|uniform-k|uniform|bpe-dropout")
      ->group("Sampler");
  app.add_option("--alpha", o.alpha, "expansion proportion")->group("Sampler");
  app.add_option("--k", o.k, "uniform-k edit distance")->group("Sampler");
  app.add_option("--p-drop", o.p_drop, "bpe-dropout merge skip probability")->group("Sampler");
  app.add_option("--k-max", o.k_max, "stochastok iteration cap")->group("Sampler");
  app.add_option("--arity", o.arity, "stochastok decompositions: 2 or 2+3")->group("Sampler");
  app.add_option("--tree-mode", o.tree_mode, "stochastok-uni trees: all or merge-reachable")->group("Sampler");
  app.add_flag("--retry", o.retry, "stochastok: redraw positions that cannot split")->group("Sampler");
  app.add_flag("--strict-k", o.strict_k, "uniform-k: fail instead of falling back to a smaller k")
      ->group("Sampler");
  app.add_option("--draws", o.draws, "draws per input line")->group("Sampler");

  app.add_option("--limit", o.limit, "enumerate: maximum tokenisations listed")->group("Analysis");
  app.add_flag("--allow-long", o.allow_long, "enumerate: lift the input length guard")->group("Analysis");
  app.add_option("--layer", o.layer, "enumerate: only tokenisations at this distance from canonical")
      ->group("Analysis");
  app.add_option("--layers", o.layers, "count: also report counts per distance 0..N")->group("Analysis");
  app.add_option("--total", o.totals, "splitdist: totals to condition on (default: all feasible)")
      ->group("Analysis");
  app.add_option("--weight", o.weight, "splitdist: splits or distance")->group("Analysis");
  app.add_option("--reference", o.reference, "histogram: reference pmf JSON file")->group("Analysis");
  app.add_flag("--reference-uniform", o.reference_uniform, "histogram: compare to uniform over all tokenisations")
      ->group("Analysis");
  app.add_option("--format", o.format, "histogram: json or csv")->group("Analysis");

  app.add_option("--dataset", o.dataset, "attack: MCQ JSONL (default: --input)")->group("Attack");
  app.add_option("--scorer", o.scorer, "toy:<constant|length-penalty|hash-ngram> or proto:<command|tcp://host:port>")
      ->group("Attack");
  app.add_option("--scorer-seed", o.scorer_seed, "hash-ngram scorer seed")->group("Attack");
  app.add_option("--steps", o.steps, "greedy iterations")->group("Attack");
  app.add_option("--radius", o.radius, "neighbourhood radius (2 or 4)")->group("Attack");
  app.add_option("--init", o.init, "canonical or uniform-random")->group("Attack");
  app.add_option("--lp-lambda", o.lp_lambda, "length-penalty slope")->group("Attack");
  app.add_option("--lp-threshold", o.lp_threshold, "length-penalty token threshold")->group("Attack");
  app.add_option("--avg-draws", o.avg_draws, "also report Monte Carlo accuracy under --scheme")->group("Attack");

  app.set_config("--config", "", "flat key=value file mirroring the long flags; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&, std::ostream&);
  };
  const Command commands[] = {
      {"encode", "canonical BPE encoding, one JSON line per input line", cmd_encode},
      {"decode", "token ids (JSON array or {\"ids\": ...}) back to text", cmd_decode},
      {"sample", "stochastic tokenisations with split metadata", cmd_sample},
      {"count", "number of valid tokenisations", cmd_count},
      {"enumerate", "list valid tokenisations", cmd_enumerate},
      {"distance", "token edit distance between tokenisations", cmd_distance},
      {"splitdist", "split-count generating functions and conditionals", cmd_splitdist},
      {"histogram", "empirical distribution of a sampler, with TV and chi-square", cmd_histogram},
      {"attack", "greedy adversarial tokenisation over an MCQ dataset", cmd_attack},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!seed_text.empty()) o.seed = parse_u64(seed_text, "--seed");
    Output output(o.output);
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) c.run(o, output.stream());
    }
    output.stream().flush();
  } catch (const InfeasibleError& e) {
    std::cerr << "stoktok: infeasible: " << e.what() << '\n';
    return 3;
  } catch (const TransportError& e) {
    std::cerr << "stoktok: scorer: " << e.what() << '\n';
    return 4;
  } catch (const InputError& e) {
    std::cerr << "stoktok: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "stoktok: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stoktok: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
