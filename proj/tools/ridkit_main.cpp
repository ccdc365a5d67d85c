// ridkit: command-line runner for the identification-code toolkit.
//
// Every subcommand resolves its parameters, runs the corresponding library
// routine, and emits one JSON document:
//
//   { command, params, seed, artifact_version, started, finished,
//     results, diagnostics }
//
// Rerunning with the same arguments and seed reproduces the document byte
// for byte except the two timestamp lines, regardless of --workers.  Some
// subcommands additionally write a CSV table (--csv).

#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ridkit/bounds.hpp"
#include "ridkit/channel.hpp"
#include "ridkit/id_codec.hpp"
#include "ridkit/numerics.hpp"
#include "ridkit/resolvability.hpp"
#include "ridkit/rng.hpp"
#include "ridkit/shell_quant.hpp"

namespace {

using nlohmann::ordered_json;

constexpr const char* kArtifactVersion = "1";

std::string timestamp_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One shortest-round-trip formatter for every number we print, JSON and CSV
// alike, so the two stay consistent and byte-stable.
std::string fmt(double v) { return ordered_json(v).dump(); }

ordered_json layered_json(const ridkit::LogLayered& x) {
  return ordered_json{{"layer", ridkit::layer_name(x.layer())},
                      {"value", x.value()}};
}

ordered_json opt_json(const std::optional<double>& x) {
  if (x) return *x;
  return nullptr;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

// Options shared by every subcommand, stored once (only one subcommand
// parses per invocation).
struct Common {
  std::uint64_t seed = 12345;
  unsigned workers = 1;
  std::string out_path;
  std::string csv_path;

  void attach(CLI::App* cmd, bool monte_carlo, bool tabular) {
    cmd->add_option("--seed", seed,
                    "Root seed for all randomness (env RIDKIT_SEED)")
        ->envname("RIDKIT_SEED");
    cmd->add_option("--out", out_path, "Write the JSON document here instead "
                                       "of stdout");
    if (monte_carlo)
      cmd->add_option("--workers", workers, "Worker threads for Monte Carlo "
                                            "loops (results do not depend on "
                                            "this)")
          ->check(CLI::Range(1u, 256u));
    if (tabular)
      cmd->add_option("--csv", csv_path, "Also write the result table as CSV");
  }
};

// Power given either linearly or as SNR in dB; converted to linear exactly
// once, here.
struct PowerOpt {
  double power = 1.0;
  double snr_db = 0.0;
  CLI::Option* linear_opt = nullptr;
  CLI::Option* db_opt = nullptr;

  void attach(CLI::App* cmd) {
    linear_opt = cmd->add_option("--power", power, "Input power P (linear)");
    db_opt = cmd->add_option("--snr-db", snr_db, "Input power as SNR in dB");
    linear_opt->excludes(db_opt);
    db_opt->excludes(linear_opt);
  }
  double resolve() const {
    if (db_opt != nullptr && db_opt->count() > 0)
      return std::pow(10.0, snr_db / 10.0);
    return power;
  }
};

struct RunOutput {
  ordered_json params = ordered_json::object();
  ordered_json results = ordered_json::object();
  ordered_json diagnostics = ordered_json::object();
  std::vector<std::vector<std::string>> csv;  // header row + data rows
};

ordered_json error_estimate_json(const ridkit::ErrorEstimate& e) {
  return ordered_json{{"value", e.value},
                      {"ci_low", e.ci_low},
                      {"ci_high", e.ci_high},
                      {"trials", e.trials}};
}

ordered_json tv_json(const ridkit::TvEstimate& tv) {
  return ordered_json{{"value", tv.value},
                      {"ci_low", tv.ci_low},
                      {"ci_high", tv.ci_high},
                      {"trials", tv.trials}};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ridkit;

  CLI::App app{"Second-order analysis of randomized identification over the "
               "AWGN channel"};
  app.require_subcommand(1);

  Common common;
  std::string command;
  std::function<void(RunOutput&)> run;

  // ---- bounds: capacity/dispersion and the two-term approximations over a
  // parameter grid.
  {
    auto* cmd = app.add_subcommand(
        "bounds", "Second-order identification and transmission curves");
    auto ns = std::make_shared<std::vector<int>>();
    auto epss = std::make_shared<std::vector<double>>();
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *ns, "Blocklength(s)")->required();
    cmd->add_option("--eps", *epss, "Type-I error target(s) in (0,1)")
        ->required();
    pw->attach(cmd);
    common.attach(cmd, /*monte_carlo=*/false, /*tabular=*/true);
    cmd->callback([&, ns, epss, pw] {
      command = "bounds";
      run = [&, ns, epss, pw](RunOutput& out) {
        const double p = pw->resolve();
        out.params["n"] = *ns;
        out.params["eps"] = *epss;
        out.params["power"] = p;
        out.csv.push_back({"n", "power", "eps", "capacity", "dispersion",
                           "loglog_N", "first_term", "second_term",
                           "transmission_log2_M"});
        ordered_json points = ordered_json::array();
        for (int n : *ns) {
          const ChannelSpec spec = ChannelSpec::make(n, p);
          for (double eps : *epss) {
            const SecondOrderEstimate id = id_second_order(spec, eps);
            const SecondOrderEstimate tx = transmission_second_order(spec, eps);
            ordered_json row;
            row["n"] = n;
            row["power"] = p;
            row["eps"] = eps;
            row["capacity"] = capacity(p);
            row["dispersion"] = dispersion(p);
            row["loglog_N"] = id.value;
            row["first_term"] = id.first_term;
            row["second_term"] = id.second_term;
            row["residual_model"] = id.residual_model;
            row["transmission_log2_M"] = tx.value;
            points.push_back(row);
            out.csv.push_back({std::to_string(n), fmt(p), fmt(eps),
                               fmt(capacity(p)), fmt(dispersion(p)),
                               fmt(id.value), fmt(id.first_term),
                               fmt(id.second_term), fmt(tx.value)});
          }
        }
        out.results["points"] = points;
        out.diagnostics["point_count"] = points.size();
      };
    });
  }

  // ---- plan: the finite-n achievability construction and its feasibility.
  {
    auto* cmd = app.add_subcommand(
        "plan", "Finite-n achievability planner with feasibility checks");
    auto n = std::make_shared<int>(0);
    auto eps = std::make_shared<double>(0.0);
    auto berry_b = std::make_shared<double>(1.0);
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *n, "Blocklength")->required();
    cmd->add_option("--eps", *eps, "Type-I error target in (0,1)")->required();
    cmd->add_option("--berry-b", *berry_b,
                    "Berry-Esseen constant for the CLT correction");
    pw->attach(cmd);
    common.attach(cmd, false, false);
    cmd->callback([&, n, eps, berry_b, pw] {
      command = "plan";
      run = [&, n, eps, berry_b, pw](RunOutput& out) {
        const double p = pw->resolve();
        out.params["n"] = *n;
        out.params["eps"] = *eps;
        out.params["berry_b"] = *berry_b;
        out.params["power"] = p;
        const AchievabilityPlan plan =
            plan_achievability(ChannelSpec::make(*n, p), *eps, *berry_b);
        ordered_json& r = out.results;
        r["n"] = plan.n;
        r["power"] = plan.power;
        r["eps"] = plan.eps;
        r["berry_b"] = plan.berry_b;
        r["c"] = plan.c;
        r["c_prime"] = plan.c_prime;
        r["d"] = plan.d;
        r["d_prime"] = plan.d_prime;
        r["tau"] = plan.tau;
        r["zeta"] = plan.zeta;
        r["f"] = plan.f;
        r["capacity"] = plan.capacity_bits;
        r["dispersion"] = plan.dispersion_bits2;
        r["kappa"] = opt_json(plan.kappa);
        r["log2_K"] = opt_json(plan.log2_pool_threshold);
        r["M"] = plan.pool_size ? layered_json(*plan.pool_size)
                                : ordered_json(nullptr);
        r["N"] = plan.code_size ? layered_json(*plan.code_size)
                                : ordered_json(nullptr);
        r["eps_bound"] = opt_json(plan.eps_bound);
        r["delta_bound"] = plan.delta_bound;
        r["delta_bound_exact"] = opt_json(plan.delta_bound_exact);
        r["feasible"] = plan.feasible;
        ordered_json cons = ordered_json::array();
        for (const auto& c : plan.constraints)
          cons.push_back(
              ordered_json{{"name", c.name}, {"satisfied", c.satisfied}});
        r["constraints"] = cons;
        r["violated"] = plan.violated();
      };
    });
  }

  // ---- sandwich: achievability / approximation / converse across n.
  {
    auto* cmd = app.add_subcommand(
        "sandwich", "Achievability-approximation-converse comparison table");
    auto ns = std::make_shared<std::vector<int>>();
    auto eps = std::make_shared<double>(0.25);
    auto berry_b = std::make_shared<double>(1.0);
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *ns, "Blocklengths")->required();
    cmd->add_option("--eps", *eps, "Type-I error target in (0,1)");
    cmd->add_option("--berry-b", *berry_b,
                    "Berry-Esseen constant for the CLT correction");
    pw->attach(cmd);
    common.attach(cmd, false, true);
    cmd->callback([&, ns, eps, berry_b, pw] {
      command = "sandwich";
      run = [&, ns, eps, berry_b, pw](RunOutput& out) {
        const double p = pw->resolve();
        out.params["n"] = *ns;
        out.params["eps"] = *eps;
        out.params["berry_b"] = *berry_b;
        out.params["power"] = p;
        const std::vector<SandwichRow> rows =
            sandwich_report(*ns, p, *eps, *berry_b);
        out.csv.push_back({"n", "feasible", "achievability", "approximation",
                           "converse", "gap_approximation", "gap_converse",
                           "delta_bound", "error"});
        ordered_json jrows = ordered_json::array();
        int feasible_count = 0;
        for (const SandwichRow& row : rows) {
          ordered_json j;
          j["n"] = row.n;
          j["feasible"] = row.feasible;
          if (row.feasible) {
            j["achievability"] = row.achievability;
            j["gap_approximation"] = row.gap_approximation;
            j["gap_converse"] = row.gap_converse;
            ++feasible_count;
          } else {
            j["achievability"] = nullptr;
            j["gap_approximation"] = nullptr;
            j["gap_converse"] = nullptr;
          }
          j["approximation"] = row.approximation;
          j["converse"] = row.converse;
          j["delta_bound"] = row.delta_bound;
          j["error"] = row.error;
          jrows.push_back(j);
          out.csv.push_back(
              {std::to_string(row.n), row.feasible ? "true" : "false",
               row.feasible ? fmt(row.achievability) : "",
               fmt(row.approximation), fmt(row.converse),
               row.feasible ? fmt(row.gap_approximation) : "",
               row.feasible ? fmt(row.gap_converse) : "",
               fmt(row.delta_bound), row.error});
        }
        out.results["rows"] = jrows;
        out.diagnostics["feasible_rows"] = feasible_count;
        out.diagnostics["total_rows"] = jrows.size();
      };
    });
  }

  // ---- clt: information-density moments and normal-approximation quality.
  {
    auto* cmd = app.add_subcommand(
        "clt", "Gaussian-limit diagnostic for the information density");
    auto n = std::make_shared<int>(0);
    auto trials = std::make_shared<std::uint64_t>(100000);
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *n, "Blocklength")->required();
    cmd->add_option("--trials", *trials, "Monte Carlo sample count");
    pw->attach(cmd);
    common.attach(cmd, true, false);
    cmd->callback([&, n, trials, pw] {
      command = "clt";
      run = [&, n, trials, pw](RunOutput& out) {
        const double p = pw->resolve();
        out.params["n"] = *n;
        out.params["trials"] = *trials;
        out.params["power"] = p;
        const ChannelSpec spec = ChannelSpec::make(*n, p);
        const std::vector<double> x = shell_probe_input(spec);
        const CltDiagnostic diag = clt_diagnostic(
            spec, x, *trials, RngStream(common.seed, 1), common.workers);
        const MomentEstimate mom = estimate_moments(
            spec, x, *trials, RngStream(common.seed, 2), common.workers);
        out.results["ks_distance"] = diag.ks_distance;
        out.results["berry_stand_in"] = diag.berry_stand_in;
        out.results["summary"] =
            ordered_json{{"trials", diag.summary.trials},
                         {"mean", diag.summary.mean},
                         {"stddev", diag.summary.stddev},
                         {"min", diag.summary.min},
                         {"max", diag.summary.max}};
        out.results["moments_per_use"] =
            ordered_json{{"mean", mom.mean},
                         {"variance", mom.variance},
                         {"third_abs", mom.third_abs},
                         {"std_error_mean", mom.std_error_mean},
                         {"trials", mom.trials}};
        out.diagnostics["capacity"] = capacity(p);
        out.diagnostics["dispersion"] = dispersion(p);
      };
    });
  }

  // ---- simulate-id: build a code and measure its error profile.
  {
    auto* cmd = app.add_subcommand(
        "simulate-id", "Build an identification code and estimate its "
                       "type-I/type-II error profile");
    auto n = std::make_shared<int>(0);
    auto messages = std::make_shared<int>(0);
    auto construction = std::make_shared<std::string>("independent_pools");
    auto per_message = std::make_shared<int>(1);
    auto pool_size = std::make_shared<int>(0);
    auto log2_threshold = std::make_shared<double>(0.0);
    auto threshold_eps = std::make_shared<double>(0.0);
    auto trials = std::make_shared<std::uint64_t>(10000);
    auto budget = std::make_shared<std::uint64_t>(100000000);
    auto cert = std::make_shared<std::vector<double>>();
    auto save_path = std::make_shared<std::string>();
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *n, "Blocklength")->required();
    cmd->add_option("--messages", *messages, "Number of messages N")
        ->required();
    cmd->add_option("--construction", *construction,
                    "Codebook construction")
        ->check(CLI::IsMember({"independent_pools", "shared_pool_subsets"}));
    cmd->add_option("--per-message", *per_message,
                    "Codewords per message (subset size for the shared pool)");
    cmd->add_option("--pool-size", *pool_size,
                    "Shared pool size (shared_pool_subsets only)");
    auto* thr = cmd->add_option_group("threshold", "Decoding threshold");
    thr->add_option("--log2-threshold", *log2_threshold,
                    "Decoding threshold log2 K (inf/-inf allowed)");
    thr->add_option("--threshold-eps", *threshold_eps,
                    "Set log2 K = nC - Qinv(eps) sqrt(nV) for this eps");
    thr->require_option(1);
    cmd->add_option("--trials", *trials, "Monte Carlo trials per estimate");
    cmd->add_option("--budget", *budget,
                    "Cap on messages*(messages-1)*trials");
    cmd->add_option("--certify", *cert,
                    "Check certification against these targets")
        ->expected(2)
        ->type_name("EPS DELTA");
    cmd->add_option("--save-code", *save_path,
                    "Also write the code in its text format");
    pw->attach(cmd);
    common.attach(cmd, true, false);
    cmd->callback([&, n, messages, construction, per_message, pool_size,
                   log2_threshold, threshold_eps, trials, budget, cert,
                   save_path, pw, thr] {
      command = "simulate-id";
      const bool eps_threshold =
          thr->get_option("--threshold-eps")->count() > 0;
      run = [&, n, messages, construction, per_message, pool_size,
             log2_threshold, threshold_eps, trials, budget, cert, save_path,
             pw, eps_threshold](RunOutput& out) {
        const double p = pw->resolve();
        const ChannelSpec spec = ChannelSpec::make(*n, p);
        IdCodeParams params;
        params.messages = *messages;
        params.construction = construction_from_name(*construction);
        params.per_message = *per_message;
        params.pool_size = *pool_size;
        params.log2_threshold =
            eps_threshold
                ? *n * capacity(p) -
                      q_inverse(*threshold_eps) * std::sqrt(*n * dispersion(p))
                : *log2_threshold;
        out.params["n"] = *n;
        out.params["power"] = p;
        out.params["messages"] = *messages;
        out.params["construction"] = *construction;
        out.params["per_message"] = *per_message;
        out.params["pool_size"] = *pool_size;
        out.params["log2_threshold"] = params.log2_threshold;
        out.params["trials"] = *trials;
        out.params["budget"] = *budget;

        RngStream build_rng(common.seed, 1);
        const IdCode code = build_id_code(spec, params, build_rng);
        if (!save_path->empty()) {
          std::ofstream f(*save_path, std::ios::binary);
          if (!f) throw std::runtime_error("cannot open " + *save_path);
          save_id_code(code, f);
        }
        const ErrorProfile profile = code_error_profile(
            code, *trials, RngStream(common.seed, 2), *budget, common.workers);

        ordered_json jmax1 = error_estimate_json(profile.max_type1);
        jmax1["message"] = profile.argmax_type1;
        ordered_json jmax2 = error_estimate_json(profile.max_type2);
        jmax2["sent"] = profile.argmax_type2_sent;
        jmax2["tested"] = profile.argmax_type2_tested;
        out.results["max_type1"] = jmax1;
        out.results["max_type2"] = jmax2;
        ordered_json t1 = ordered_json::array();
        for (std::size_t i = 0; i < profile.type1.size(); ++i) {
          ordered_json j = error_estimate_json(profile.type1[i]);
          j["message"] = i;
          t1.push_back(j);
        }
        out.results["type1"] = t1;
        ordered_json t2 = ordered_json::array();
        for (const PairError& pe : profile.type2) {
          ordered_json j = error_estimate_json(pe.estimate);
          j["sent"] = pe.sent;
          j["tested"] = pe.tested;
          t2.push_back(j);
        }
        out.results["type2"] = t2;
        if (cert->size() == 2) {
          out.results["certify_eps"] = (*cert)[0];
          out.results["certify_delta"] = (*cert)[1];
          out.results["certified"] = profile.certifies((*cert)[0], (*cert)[1]);
        }
        out.diagnostics["construction_seed"] = code.seed;
        out.diagnostics["construction_stream"] = code.stream_id;
      };
    });
  }

  // ---- resolvability: TV between induced mixtures and the target output.
  {
    auto* cmd = app.add_subcommand(
        "resolvability", "Total-variation curve of random codebooks against "
                         "the target output law");
    auto n = std::make_shared<int>(0);
    auto rates = std::make_shared<std::vector<double>>();
    auto trials = std::make_shared<std::uint64_t>(10000);
    auto target = std::make_shared<std::string>("shell");
    auto pw = std::make_shared<PowerOpt>();
    cmd->add_option("--n", *n, "Blocklength (<= 12)")->required();
    cmd->add_option("--rate", *rates,
                    "Rates in bits/use (default: capacity-centered curve)");
    cmd->add_option("--trials", *trials, "TV Monte Carlo trials per rate");
    cmd->add_option("--target", *target, "Target output law")
        ->check(CLI::IsMember({"shell", "cao"}));
    pw->attach(cmd);
    common.attach(cmd, true, true);
    cmd->callback([&, n, rates, trials, target, pw] {
      command = "resolvability";
      run = [&, n, rates, trials, target, pw](RunOutput& out) {
        const double p = pw->resolve();
        const ChannelSpec spec = ChannelSpec::make(*n, p);
        std::vector<double> rs = *rates;
        if (rs.empty()) {
          const double c = capacity(p);
          rs = {c - 0.25, c, c + 0.25, c + 0.5};
        }
        out.params["n"] = *n;
        out.params["power"] = p;
        out.params["rate"] = rs;
        out.params["trials"] = *trials;
        out.params["target"] = *target;
        const ResolvabilityTarget tgt = *target == "cao"
                                            ? ResolvabilityTarget::cao
                                            : ResolvabilityTarget::shell;
        const std::vector<ResolvabilityPoint> curve = resolvability_experiment(
            spec, rs, *trials, RngStream(common.seed, 1), common.workers, tgt);
        out.csv.push_back(
            {"rate_bits", "M", "tv", "ci_low", "ci_high", "trials", "seed"});
        ordered_json jrows = ordered_json::array();
        for (const ResolvabilityPoint& pt : curve) {
          ordered_json j;
          j["rate_bits"] = pt.rate_bits;
          j["M"] = pt.codebook_size;
          j["tv"] = pt.tv.value;
          j["ci_low"] = pt.tv.ci_low;
          j["ci_high"] = pt.tv.ci_high;
          j["trials"] = pt.tv.trials;
          jrows.push_back(j);
          out.csv.push_back({fmt(pt.rate_bits),
                             std::to_string(pt.codebook_size),
                             fmt(pt.tv.value), fmt(pt.tv.ci_low),
                             fmt(pt.tv.ci_high), std::to_string(pt.tv.trials),
                             std::to_string(common.seed)});
        }
        out.results["rows"] = jrows;
        out.diagnostics["capacity"] = capacity(p);
      };
    });
  }

  // ---- quantize: sector arithmetic and the quantization TV report.
  {
    auto* cmd = app.add_subcommand(
        "quantize", "Shell sector quantizer: counts, growth ratio, and "
                    "quantization fidelity");
    auto n = std::make_shared<int>(0);
    auto theta = std::make_shared<double>(0.0);
    auto radius = std::make_shared<double>(0.0);
    auto atoms = std::make_shared<int>(0);
    auto trials = std::make_shared<std::uint64_t>(10000);
    auto save_path = std::make_shared<std::string>();
    auto pw = std::make_shared<PowerOpt>();
    CLI::Option* radius_opt =
        cmd->add_option("--radius", *radius,
                        "Shell radius (default sqrt(n * power))");
    cmd->add_option("--n", *n, "Dimension (>= 2)")->required();
    cmd->add_option("--theta", *theta, "Sector angular width in radians")
        ->required();
    cmd->add_option("--atoms", *atoms,
                    "Quantize a random distribution with this many atoms and "
                    "report the TV cost (0 = counts only)");
    cmd->add_option("--trials", *trials, "TV Monte Carlo trials");
    cmd->add_option("--save-dist", *save_path,
                    "Write the quantized distribution in its text format");
    pw->attach(cmd);
    common.attach(cmd, true, false);
    cmd->callback([&, n, theta, radius, atoms, trials, save_path, pw,
                   radius_opt] {
      command = "quantize";
      const bool has_radius = radius_opt->count() > 0;
      run = [&, n, theta, radius, atoms, trials, save_path, pw,
             has_radius](RunOutput& out) {
        const double p = pw->resolve();
        const ChannelSpec spec = ChannelSpec::make(*n, p);
        const double r = has_radius ? *radius : spec.shell_radius();
        out.params["n"] = *n;
        out.params["theta"] = *theta;
        out.params["radius"] = r;
        out.params["power"] = p;
        out.params["atoms"] = *atoms;
        if (*atoms > 0) out.params["trials"] = *trials;

        const QuantizerSpec qspec = QuantizerSpec::make(*n, *theta, r);
        out.results["polar_bins"] = qspec.polar_bins;
        out.results["azimuthal_bins"] = qspec.azimuthal_bins;
        out.results["sector_count"] = layered_json(sector_count(qspec));
        out.results["log2_ideal_count"] = sector_count_log2_ideal(*n, *theta);
        out.results["growth_ratio"] =
            *n >= 3 ? ordered_json(sector_growth_ratio(*n))
                    : ordered_json(nullptr);

        if (*atoms > 0) {
          RngStream atom_rng(common.seed, 1);
          std::vector<WeightedSample> samples(*atoms);
          for (WeightedSample& s : samples) {
            s.point = sample_shell(spec, atom_rng);
            for (double& v : s.point) v *= r / spec.shell_radius();
            s.weight = 1.0 / *atoms;
          }
          const QuantizationTvReport report = quantization_tv_report(
              samples, qspec, spec, *trials, RngStream(common.seed, 2),
              common.workers);
          out.results["report"] =
              ordered_json{{"empirical", tv_json(report.empirical)},
                           {"bound", report.bound},
                           {"bound_scaled_kl", report.bound_scaled_kl},
                           {"closed_form_at_exp_theta",
                            report.closed_form_at_exp_theta}};
          const QuantizedDistribution dist =
              quantize_distribution(samples, qspec);
          out.diagnostics["sectors_occupied"] = dist.mass.size();
          if (!save_path->empty()) {
            std::ofstream f(*save_path, std::ios::binary);
            if (!f) throw std::runtime_error("cannot open " + *save_path);
            save_quantized(dist, f);
          }
        }
      };
    });
  }

  // ---- frey: the soft-covering rate/probability bound.
  {
    auto* cmd = app.add_subcommand(
        "frey", "Soft-covering bound: rate, mu, and failure probability");
    auto fp = std::make_shared<FreyParams>();
    fp->c = 2.0;
    fp->d = 0.5;
    cmd->add_option("--n", fp->n, "Blocklength")->required();
    cmd->add_option("--mutual-info", fp->mutual_info,
                    "Mutual information I, bits/use")
        ->required();
    cmd->add_option("--central-second", fp->central_second,
                    "Central second moment V, bits^2/use")
        ->required();
    cmd->add_option("--third-abs", fp->third_abs,
                    "Absolute third moment rho, bits^3/use")
        ->required();
    cmd->add_option("--xi", fp->xi, "Target TV level in (0,1)")->required();
    cmd->add_option("--c", fp->c, "Rate margin c > 1");
    cmd->add_option("--d", fp->d, "Split margin d in (0, c-1)");
    common.attach(cmd, false, false);
    cmd->callback([&, fp] {
      command = "frey";
      run = [&, fp](RunOutput& out) {
        out.params["n"] = fp->n;
        out.params["mutual_info"] = fp->mutual_info;
        out.params["central_second"] = fp->central_second;
        out.params["third_abs"] = fp->third_abs;
        out.params["xi"] = fp->xi;
        out.params["c"] = fp->c;
        out.params["d"] = fp->d;
        const FreyBound b = frey_bound(*fp);
        out.results["rate_bits"] = b.rate_bits;
        out.results["mu"] = b.mu;
        out.results["bound"] = b.bound;
        out.results["log2_term1"] = b.log2_term1;
        out.results["term2"] = b.term2;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunOutput out;
    const std::string started = timestamp_utc();
    run(out);
    const std::string finished = timestamp_utc();

    ordered_json doc;
    doc["command"] = command;
    doc["params"] = out.params;
    doc["seed"] = common.seed;
    doc["artifact_version"] = kArtifactVersion;
    doc["started"] = started;
    doc["finished"] = finished;
    doc["results"] = out.results;
    doc["diagnostics"] = out.diagnostics;
    const std::string text = doc.dump(2) + "\n";

    if (common.out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream f(common.out_path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open " + common.out_path);
      f << text;
    }
    if (!common.csv_path.empty() && !out.csv.empty()) {
      std::ofstream f(common.csv_path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot open " + common.csv_path);
      for (const auto& row : out.csv) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (i) f << ',';
          f << csv_escape(row[i]);
        }
        f << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "ridkit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
