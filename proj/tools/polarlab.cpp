// Command-line driver: classify operations, inspect and transform channels,
// run polarization sweeps, verify the inequality suites, and analyze MACs.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polarlab/polarlab.hpp"

using json = nlohmann::ordered_json;
using namespace polarlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;
constexpr int kExitViolation = 4;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

unsigned resolve_threads(unsigned flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("POLARLAB_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

std::string block_list(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

json cert_json(const EasinessCertificate& c) {
  json j;
  j["verdict"] = to_string(c.verdict);
  j["L"] = c.levels;
  j["partition"] = c.witness ? c.witness->str() : "";
  j["gap_capacity"] = c.gap_capacity;
  j["gap_projected"] = c.gap_projected;
  j["pe_projected"] = c.pe_projected;
  if (c.pe_within) j["pe_within_epsilon"] = *c.pe_within;
  if (!c.diagnostic.empty()) j["diagnostic"] = c.diagnostic;
  return j;
}

json cert_json(const MacEasinessCertificate& c) {
  json j;
  j["verdict"] = to_string(c.verdict);
  j["L"] = c.levels;
  j["partition"] = c.witness ? c.witness->str() : "";
  j["gap_capacity"] = c.gap_capacity;
  j["gap_projected"] = c.gap_projected;
  j["pe_projected"] = c.pe_projected;
  if (c.pe_within) j["pe_within_epsilon"] = *c.pe_within;
  j["L_i"] = c.user_levels;
  json factors = json::array();
  if (c.factors)
    for (const auto& f : *c.factors) factors.push_back(f.str());
  j["factorization"] = factors;
  if (!c.diagnostic.empty()) j["diagnostic"] = c.diagnostic;
  return j;
}

std::string records_csv(const std::vector<PolarRecord>& records, bool partial) {
  std::string csv = "s,I,Z,Zmin,Zmax,outputs,verdict,L,gap_capacity,gap_projected\n";
  for (const auto& r : records) {
    csv += sign_string(r.seq) + ',' + fmt(r.info) + ',' + fmt(r.z) + ',' + fmt(r.z_min) + ',' +
           fmt(r.z_max) + ',' + std::to_string(r.outputs) + ',' + to_string(r.cert.verdict) +
           ',' + std::to_string(r.cert.levels) + ',' + fmt(r.cert.gap_capacity) + ',' +
           fmt(r.cert.gap_projected) + '\n';
  }
  if (partial) csv += "# partial: budget exceeded before all leaves were computed\n";
  return csv;
}

json summary_json(const PolarSummary& s) {
  json j;
  j["leaves"] = s.leaf_count;
  j["mean_I"] = s.mean_info;
  j["fraction_certified"] = s.fraction_certified;
  j["histogram"] = {{"width", s.histogram_width}, {"counts", s.histogram}};
  j["partial"] = s.partial;
  return j;
}

struct PolarizeArgs {
  std::string chan_path, op_path, mode = "exhaustive";
  std::size_t depth = 4, samples = 0, budget = kDefaultOutputBudget;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double delta = 0.05, hist_width = 0.05;
  std::optional<double> epsilon;
  unsigned threads = 0;
  std::string csv_path, json_path;
  bool force = false;
};

int run_polarize(const PolarizeArgs& a) {
  Channel w = parse_channel(slurp(a.chan_path));
  CayleyTable op = parse_op(slurp(a.op_path));
  PolarConfig cfg;
  cfg.depth = a.depth;
  cfg.mode = a.mode == "montecarlo" ? RunMode::MonteCarlo : RunMode::Exhaustive;
  if (cfg.mode == RunMode::MonteCarlo) {
    if (!a.seed_set) throw ParseError("montecarlo mode requires --seed");
    if (a.samples == 0) throw ParseError("montecarlo mode requires --samples");
  }
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.delta = a.delta;
  cfg.epsilon = a.epsilon;
  cfg.budget.max_outputs = a.budget;
  cfg.threads = resolve_threads(a.threads);
  cfg.histogram_width = a.hist_width;
  cfg.allow_non_uniformity_preserving = a.force;

  PolarResult res = polarization_run(w, op, cfg);
  std::string csv = records_csv(res.records, res.summary.partial);
  if (!a.csv_path.empty()) write_file(a.csv_path, csv);
  json j = summary_json(res.summary);
  if (!a.json_path.empty()) write_file(a.json_path, j.dump(2) + "\n");
  if (a.csv_path.empty()) std::cout << csv;
  std::cout << j.dump(2) << "\n";
  return res.summary.partial ? kExitBudget : kExitOk;
}

int run_verify(const std::string& chan_path, const std::string& op_path, std::size_t depth,
               std::size_t budget) {
  TransformOptions opts;
  opts.max_outputs = budget;
  struct Case {
    std::string name;
    Channel chan;
    CayleyTable op;
  };
  std::vector<Case> cases;
  if (!chan_path.empty() != !op_path.empty())
    throw ParseError("verify needs both --chan and --op, or neither");
  if (!chan_path.empty()) {
    cases.push_back({"user", parse_channel(slurp(chan_path)), parse_op(slurp(op_path))});
  } else {
    cases.push_back({"bec(0.3)+xor", bec(0.3), CayleyTable::xor2()});
    cases.push_back({"bec(0.7)+xor", bec(0.7), CayleyTable::xor2()});
    cases.push_back({"bsc(0.11)+xor", bsc(0.11), CayleyTable::xor2()});
    cases.push_back({"perfect(3)+add3", perfect_channel(3), CayleyTable::add_mod(3)});
    cases.push_back({"erasure(4,0.4)+add4", erasure_channel(4, 0.4), CayleyTable::add_mod(4)});
    cases.push_back(
        {"erasure(4,0.25)+example4", erasure_channel(4, 0.25), CayleyTable::four_element_example()});
    for (std::uint64_t s = 1; s <= 4; ++s)
      cases.push_back({"random#" + std::to_string(s), random_channel(s, 3, 2),
                       CayleyTable::random_uniformity_preserving(s, 3)});
  }
  bool all_ok = true;
  for (const auto& c : cases) {
    auto prop = verify_capacity_bhatt_inequalities(c.chan);
    auto lemmas = verify_bhatt_lemmas(c.chan, c.op, depth, opts);
    bool ok = prop.ok && lemmas.ok;
    all_ok = all_ok && ok;
    std::cout << (ok ? "ok   " : "FAIL ") << c.name << "  capacity-slack=" << fmt(prop.worst_slack)
              << "  minus-slack=" << fmt(lemmas.worst_minus_slack)
              << "  plus-gap=" << fmt(lemmas.worst_plus_gap)
              << "  seq-slack=" << fmt(lemmas.worst_seq_slack) << "  (" << lemmas.sequences_checked
              << " sequences)\n";
  }
  std::cout << (all_ok ? "all inequality checks passed\n" : "violations detected\n");
  return all_ok ? kExitOk : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-operation polarization workbench"};
  app.require_subcommand(1);

  // --- op ---
  auto* op_cmd = app.add_subcommand("op", "operation table commands");
  op_cmd->require_subcommand(1);
  std::string op_path;
  bool op_json = false;
  auto* op_classify = op_cmd->add_subcommand("classify", "classify an operation table");
  op_classify->add_option("table", op_path, "operation file")->required();
  op_classify->add_flag("--json", op_json, "emit JSON");

  std::vector<std::string> product_paths;
  std::string product_out;
  auto* op_product = op_cmd->add_subcommand("product", "componentwise product of operations");
  op_product->add_option("tables", product_paths, "operation files")->required()->expected(-2);
  op_product->add_option("-o,--out", product_out, "output file (default stdout)");

  std::size_t sweep_size = 2, sweep_budget = 100000;
  std::uint64_t sweep_seed = 1;
  auto* op_sweep = op_cmd->add_subcommand(
      "sweep", "classify all tables of a size (or a seeded sample when over budget)");
  op_sweep->add_option("--size", sweep_size, "alphabet size")->check(CLI::Range(2, 4));
  op_sweep->add_option("--budget", sweep_budget, "maximum number of tables to classify");
  op_sweep->add_option("--seed", sweep_seed, "sampling seed used when over budget");

  // --- chan ---
  auto* chan_cmd = app.add_subcommand("chan", "channel commands");
  chan_cmd->require_subcommand(1);
  std::string chan_path;
  double chan_delta = 0.0;
  auto* chan_info = chan_cmd->add_subcommand("info", "capacity, error and overlap parameters");
  chan_info->add_option("channel", chan_path, "channel file")->required();
  chan_info->add_option("--delta", chan_delta, "also run the easiness check at this threshold");

  std::string tr_chan, tr_op, tr_signs, tr_out;
  std::size_t tr_budget = kDefaultOutputBudget;
  auto* chan_tr = chan_cmd->add_subcommand("transform", "apply a sign sequence");
  chan_tr->add_option("channel", tr_chan, "channel file")->required();
  chan_tr->add_option("--op", tr_op, "operation file")->required();
  chan_tr->add_option("--sign", tr_signs, "sequence over -+ (e.g. '-+-')")->required();
  chan_tr->add_option("-o,--out", tr_out, "output channel file (default stdout)");
  chan_tr->add_option("--budget", tr_budget, "canonical output budget");

  // --- polarize ---
  PolarizeArgs pa;
  auto* pol = app.add_subcommand("polarize", "run the sign-sequence process");
  pol->add_option("--chan", pa.chan_path, "channel file")->required();
  pol->add_option("--op", pa.op_path, "operation file")->required();
  pol->add_option("--depth", pa.depth, "sequence length");
  pol->add_option("--mode", pa.mode, "exhaustive|montecarlo")
      ->check(CLI::IsMember({"exhaustive", "montecarlo"}));
  pol->add_option("--samples", pa.samples, "Monte-Carlo path count");
  pol->add_option("--seed", pa.seed, "Monte-Carlo seed")->each([&](const std::string&) {
    pa.seed_set = true;
  });
  pol->add_option("--delta", pa.delta, "easiness threshold");
  double pol_eps = -1.0;
  pol->add_option("--epsilon", pol_eps, "error-probability threshold");
  pol->add_option("--budget", pa.budget, "canonical output budget");
  pol->add_option("--threads", pa.threads, "worker threads (env POLARLAB_THREADS as fallback)");
  pol->add_option("--histogram-width", pa.hist_width, "histogram bucket width in bits");
  pol->add_option("--csv", pa.csv_path, "per-leaf CSV output path");
  pol->add_option("--json", pa.json_path, "summary JSON output path");
  pol->add_flag("--force", pa.force, "run even without uniformity preservation");

  // --- verify ---
  std::string ver_chan, ver_op;
  std::size_t ver_depth = 3, ver_budget = 600000;
  auto* ver = app.add_subcommand("verify", "inequality suites on fixtures or a given pair");
  ver->add_option("--chan", ver_chan, "channel file");
  ver->add_option("--op", ver_op, "operation file");
  ver->add_option("--depth", ver_depth, "sequence depth for the multi-step bound (max 4)");
  ver->add_option("--budget", ver_budget, "canonical output budget");

  // --- mac ---
  auto* mac_cmd = app.add_subcommand("mac", "multiple-access channel commands");
  mac_cmd->require_subcommand(1);
  std::string mac_path;
  std::vector<std::string> mac_ops;
  double mac_delta = 0.05;
  double mac_eps = -1.0;
  std::string mac_json_path;
  auto* mac_easy = mac_cmd->add_subcommand("easiness", "stable-partition certificate");
  mac_easy->add_option("--mac", mac_path, "MAC file")->required();
  mac_easy->add_option("--ops", mac_ops, "operation files, one per user")->required();
  mac_easy->add_option("--delta", mac_delta, "easiness threshold");
  mac_easy->add_option("--epsilon", mac_eps, "error-probability threshold");
  mac_easy->add_option("--json", mac_json_path, "certificate output path");

  PolarizeArgs ma;
  std::string mp_mac;
  std::vector<std::string> mp_ops;
  auto* mac_pol = mac_cmd->add_subcommand("polarize", "delegated polarization run");
  mac_pol->add_option("--mac", mp_mac, "MAC file")->required();
  mac_pol->add_option("--ops", mp_ops, "operation files, one per user")->required();
  mac_pol->add_option("--depth", ma.depth, "sequence length");
  mac_pol->add_option("--mode", ma.mode, "exhaustive|montecarlo")
      ->check(CLI::IsMember({"exhaustive", "montecarlo"}));
  mac_pol->add_option("--samples", ma.samples, "Monte-Carlo path count");
  mac_pol->add_option("--seed", ma.seed, "Monte-Carlo seed")->each([&](const std::string&) {
    ma.seed_set = true;
  });
  mac_pol->add_option("--delta", ma.delta, "easiness threshold");
  mac_pol->add_option("--budget", ma.budget, "canonical output budget");
  mac_pol->add_option("--threads", ma.threads, "worker threads");
  mac_pol->add_option("--csv", ma.csv_path, "per-leaf CSV output path");
  mac_pol->add_option("--json", ma.json_path, "summary JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*op_classify) {
      CayleyTable op = parse_op(slurp(op_path));
      OpClassification c = classify(op);
      if (op_json) {
        json j;
        j["size"] = op.size();
        j["uniformity_preserving"] = c.uniformity_preserving;
        j["irreducible"] = c.irreducible;
        j["ergodic"] = c.ergodic;
        j["quasigroup"] = c.quasigroup;
        j["inverse_strongly_ergodic"] = c.inverse_strongly_ergodic;
        j["polarizing"] = c.polarizing;
        j["zero_exponent_condition"] = c.zero_exponent_condition;
        if (c.scon_estimate) j["scon_estimate"] = *c.scon_estimate;
        if (c.invariant_set) j["invariant_set"] = block_list(*c.invariant_set);
        if (c.cyclic_classes) {
          json cls = json::array();
          for (const auto& cl : *c.cyclic_classes) cls.push_back(block_list(cl));
          j["cyclic_classes"] = cls;
        }
        if (c.uniformity_preserving) {
          json st = json::array();
          for (const auto& h : enumerate_stable_partitions(inverse_op(op))) st.push_back(h.str());
          j["inverse_stable_partitions"] = st;
        }
        std::cout << j.dump(2) << "\n";
      } else {
        auto yn = [](bool b) { return b ? "yes" : "no"; };
        std::cout << "size: " << op.size() << "\n"
                  << "uniformity preserving: " << yn(c.uniformity_preserving) << "\n"
                  << "irreducible: " << yn(c.irreducible) << "\n"
                  << "ergodic: " << yn(c.ergodic) << "\n"
                  << "quasigroup: " << yn(c.quasigroup) << "\n"
                  << "inverse strongly ergodic: " << yn(c.inverse_strongly_ergodic) << " (by "
                  << (c.inverse_decision.empty() ? "n/a" : c.inverse_decision) << ")\n"
                  << "polarizing: " << yn(c.polarizing)
                  << (!c.uniformity_preserving ? " (not uniformity preserving)" : "") << "\n"
                  << "zero-exponent condition: " << yn(c.zero_exponent_condition) << "\n";
        if (c.scon_estimate) std::cout << "scon estimate (inverse): " << *c.scon_estimate << "\n";
        if (c.invariant_set)
          std::cout << "invariant set: {" << block_list(*c.invariant_set) << "}\n";
        if (c.cyclic_classes) {
          std::cout << "cyclic classes:";
          for (const auto& cl : *c.cyclic_classes) std::cout << " {" << block_list(cl) << "}";
          std::cout << "\n";
        }
        if (c.uniformity_preserving) {
          std::cout << "stable partitions of the inverse:";
          for (const auto& h : enumerate_stable_partitions(inverse_op(op)))
            std::cout << "  " << h.str();
          std::cout << "\n";
        }
      }
      return kExitOk;
    }
    if (*op_product) {
      std::vector<CayleyTable> ops;
      for (const auto& p : product_paths) ops.push_back(parse_op(slurp(p)));
      std::string text = format_op(product_op(ops));
      if (product_out.empty()) std::cout << text;
      else write_file(product_out, text);
      return kExitOk;
    }
    if (*op_sweep) {
      const std::size_t n = sweep_size;
      const double total = std::pow(double(n), double(n * n));
      const bool exhaustive = total <= double(sweep_budget);
      std::size_t count = exhaustive ? std::size_t(total) : sweep_budget;
      struct Tally {
        std::size_t total = 0, up = 0, quasi = 0, ergodic = 0, polarizing = 0, zero_exp = 0;
      } tally;
      SplitMix64 g(sweep_seed);
      std::vector<int> t(n * n);
      for (std::size_t i = 0; i < count; ++i) {
        if (exhaustive) {
          std::size_t code = i;
          for (auto& v : t) {
            v = static_cast<int>(code % n);
            code /= n;
          }
        } else {
          for (auto& v : t) v = static_cast<int>(g.next_below(n));
        }
        auto c = classify(CayleyTable(n, t));
        ++tally.total;
        tally.up += c.uniformity_preserving;
        tally.quasi += c.quasigroup;
        tally.ergodic += c.ergodic;
        tally.polarizing += c.polarizing;
        tally.zero_exp += c.polarizing && c.zero_exponent_condition;
      }
      std::cout << (exhaustive ? "exhaustive" : "sampled") << " sweep of size-" << n
                << " tables\n"
                << "classified: " << tally.total << "\n"
                << "uniformity preserving: " << tally.up << "\n"
                << "quasigroup: " << tally.quasi << "\n"
                << "ergodic: " << tally.ergodic << "\n"
                << "polarizing: " << tally.polarizing << "\n"
                << "polarizing with zero-exponent condition: " << tally.zero_exp << "\n";
      return kExitOk;
    }
    if (*chan_info) {
      Channel w = parse_channel(slurp(chan_path));
      auto form = canonical_form(w);
      std::cout << "inputs: " << w.input_size() << "\noutputs: " << w.output_count()
                << " (canonical " << form.entries.size() << ")\n"
                << "I: " << fmt(mutual_info(w)) << " bits\nPe: " << fmt(prob_error(w)) << "\n";
      if (w.input_size() >= 2) {
        auto bh = bhattacharyya(w);
        std::cout << "Z: " << fmt(bh.z) << "  Zmin: " << fmt(bh.z_min)
                  << "  Zmax: " << fmt(bh.z_max) << "\n";
      }
      if (chan_delta > 0.0) {
        auto cert = easiness_check(w, chan_delta);
        std::cout << "easiness: " << cert_json(cert).dump(2) << "\n";
      }
      return kExitOk;
    }
    if (*chan_tr) {
      Channel w = parse_channel(slurp(tr_chan));
      CayleyTable op = parse_op(slurp(tr_op));
      TransformOptions opts;
      opts.max_outputs = tr_budget;
      Channel out = transform_seq(w, op, parse_signs(tr_signs), opts);
      std::string text = format_channel(out);
      if (tr_out.empty()) std::cout << text;
      else write_file(tr_out, text);
      return kExitOk;
    }
    if (*pol) {
      if (pol_eps >= 0.0) pa.epsilon = pol_eps;
      return run_polarize(pa);
    }
    if (*ver) return run_verify(ver_chan, ver_op, ver_depth, ver_budget);
    if (*mac_easy) {
      Mac mac = parse_mac(slurp(mac_path));
      std::vector<CayleyTable> ops;
      for (const auto& p : mac_ops) ops.push_back(parse_op(slurp(p)));
      std::optional<double> eps;
      if (mac_eps >= 0.0) eps = mac_eps;
      auto cert = mac_easiness_check(mac, ops, mac_delta, eps);
      json j = cert_json(cert);
      if (!mac_json_path.empty()) write_file(mac_json_path, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    if (*mac_pol) {
      Mac mac = parse_mac(slurp(mp_mac));
      std::vector<CayleyTable> ops;
      for (const auto& p : mp_ops) ops.push_back(parse_op(slurp(p)));
      PolarConfig cfg;
      cfg.depth = ma.depth;
      cfg.mode = ma.mode == "montecarlo" ? RunMode::MonteCarlo : RunMode::Exhaustive;
      if (cfg.mode == RunMode::MonteCarlo && (!ma.seed_set || ma.samples == 0))
        throw ParseError("montecarlo mode requires --seed and --samples");
      cfg.samples = ma.samples;
      cfg.seed = ma.seed;
      cfg.delta = ma.delta;
      cfg.budget.max_outputs = ma.budget;
      cfg.threads = resolve_threads(ma.threads);
      auto res = mac_polarization_run(mac, ops, cfg);
      std::string csv = "s,I,verdict,L,Li,gap_capacity,gap_projected\n";
      for (std::size_t i = 0; i < res.base.records.size(); ++i) {
        const auto& r = res.base.records[i];
        const auto& c = res.mac_certs[i];
        std::string li;
        for (std::size_t k = 0; k < c.user_levels.size(); ++k)
          li += (k ? "x" : "") + std::to_string(c.user_levels[k]);
        csv += sign_string(r.seq) + ',' + fmt(r.info) + ',' + to_string(c.verdict) + ',' +
               std::to_string(c.levels) + ',' + li + ',' + fmt(c.gap_capacity) + ',' +
               fmt(c.gap_projected) + '\n';
      }
      if (!ma.csv_path.empty()) write_file(ma.csv_path, csv);
      else std::cout << csv;
      json j;
      j["leaves"] = res.base.summary.leaf_count;
      j["mean_I"] = res.base.summary.mean_info;
      j["fraction_mac_certified"] = res.fraction_mac_certified;
      j["fraction_reduced_certified"] = res.base.summary.fraction_certified;
      j["partial"] = res.base.summary.partial;
      if (!ma.json_path.empty()) write_file(ma.json_path, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return res.base.summary.partial ? kExitBudget : kExitOk;
    }
  } catch (const SizeCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
