#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coopdqn/analysis.hpp"
#include "coopdqn/config.hpp"
#include "coopdqn/csv.hpp"
#include "coopdqn/simulator.hpp"

namespace coopdqn {

inline constexpr const char* kToolName = "coopdqn";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kWorkersEnv = "COOPDQN_WORKERS";

struct PlannedRun {
    std::size_t index = 0;
    std::string run_id;
    std::vector<std::uint64_t> axis_indices;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    /// axis name -> label, in axis order
    std::vector<std::pair<std::string, std::string>> labels;
    RunConfig config;
};

inline std::string make_run_id(std::size_t index) {
    std::ostringstream os;
    os << "run" << std::setw(6) << std::setfill('0') << index;
    return os.str();
}

/// Cartesian product of the axes (first axis slowest) times the seed list.
/// Each run's seed is derive_seed(seeds[k], axis_indices, k).
inline std::vector<PlannedRun> plan_runs(const ExperimentSpec& spec) {
    if (spec.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    for (const auto& ax : spec.axes)
        if (ax.values.empty()) throw ConfigError("sweep axis '" + ax.name + "' is empty");
    std::vector<PlannedRun> out;
    std::vector<std::uint64_t> idx(spec.axes.size(), 0);
    while (true) {
        for (std::size_t k = 0; k < spec.seeds.size(); ++k) {
            PlannedRun p;
            p.index = out.size();
            p.run_id = make_run_id(p.index);
            p.axis_indices = idx;
            p.seed_index = k;
            p.seed = derive_seed(spec.seeds[k], idx, k);
            p.config = spec.base;
            for (std::size_t a = 0; a < spec.axes.size(); ++a) {
                const auto& v = spec.axes[a].values[idx[a]];
                apply_axis(p.config, spec.diagonal, spec.axes[a].name, v);
                p.labels.emplace_back(spec.axes[a].name, axis_label(v));
            }
            p.config.seed = p.seed;
            try {
                p.config.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(p.run_id + ": " + e.what());
            }
            out.push_back(std::move(p));
        }
        std::size_t a = spec.axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < spec.axes[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
        if (spec.axes.empty()) return out;
    }
}

struct SweepOutcome {
    std::size_t index = 0;
    std::optional<RunResult> result;
    std::string error;
};

/// Runs every planned configuration on `workers` threads. `collect` receives
/// outcomes strictly in plan order, serialized, as soon as each prefix is complete.
inline void execute_sweep(const std::vector<PlannedRun>& plan, std::size_t workers,
                          const std::function<void(const PlannedRun&, SweepOutcome&&)>& collect,
                          const std::function<bool(const PlannedRun&)>& skip = {}) {
    std::vector<std::size_t> todo;
    for (const auto& p : plan)
        if (!skip || !skip(p)) todo.push_back(p.index);
    if (todo.empty()) return;
    workers = std::max<std::size_t>(1, std::min(workers, todo.size()));

    std::mutex mu;
    std::map<std::size_t, SweepOutcome> ready;
    std::size_t next_emit = 0; // position in todo
    std::atomic<std::size_t> next_job{0};

    auto flush_locked = [&]() {
        while (next_emit < todo.size()) {
            auto it = ready.find(todo[next_emit]);
            if (it == ready.end()) break;
            collect(plan[it->first], std::move(it->second));
            ready.erase(it);
            ++next_emit;
        }
    };

    auto worker = [&]() {
        while (true) {
            const std::size_t j = next_job.fetch_add(1);
            if (j >= todo.size()) return;
            const PlannedRun& p = plan[todo[j]];
            SweepOutcome o;
            o.index = p.index;
            try {
                o.result = run(p.config);
            } catch (const std::exception& e) {
                o.error = e.what();
            }
            std::lock_guard lock(mu);
            ready.emplace(p.index, std::move(o));
            flush_locked();
        }
    };

    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
}

inline const std::vector<std::string>& runs_csv_header() {
    static const std::vector<std::string> h{"run_id",   "B",         "tau_init", "d_r",      "d_g",
                                            "topology", "architecture", "augmentation", "L", "seed",
                                            "coop_mean", "q_mean",    "q_gap",    "silhouette", "wall_time",
                                            "status"};
    return h;
}

inline const std::vector<std::string>& thresholds_csv_header() {
    static const std::vector<std::string> h{"B",   "tau_init", "topology", "architecture", "augmentation", "L",
                                            "cell", "criterion", "d_r_star", "marker",      "n_points"};
    return h;
}

inline std::vector<std::string> runs_row(const PlannedRun& p, const RunResult* r, const std::string& status) {
    const auto& c = p.config;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double B = c.schedule.t_anneal >= 2 ? exploration_strength(c.schedule) : c.schedule.tau_init;
    return {p.run_id,
            csv::format(B),
            csv::format(c.schedule.tau_init),
            csv::format(c.d_r),
            csv::format(c.d_g),
            to_string(c.topology.kind),
            to_string(c.architecture),
            to_string(c.augmentation),
            std::to_string(c.topology.L),
            std::to_string(c.seed),
            csv::format(r ? r->coop_mean : nan),
            csv::format(r ? r->q_mean : nan),
            csv::format(r ? r->q_gap : nan),
            csv::format(r ? r->silhouette : nan),
            csv::format(r ? r->wall_time : nan),
            csv::sanitize(status)};
}

inline Json manifest_json(const ExperimentSpec& spec, const std::vector<PlannedRun>& plan) {
    Json runs = Json::array();
    for (const auto& p : plan) {
        Json labels = Json::object();
        for (const auto& [k, v] : p.labels) labels[k] = v;
        runs.push_back({{"run_id", p.run_id},
                        {"seed", p.seed},
                        {"base_seed", spec.seeds[p.seed_index]},
                        {"seed_index", p.seed_index},
                        {"axis_indices", p.axis_indices},
                        {"labels", std::move(labels)}});
    }
    Json m;
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["spec"] = spec_to_json(spec);
    m["runs"] = std::move(runs);
    return m;
}

struct RunOptions {
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;
    bool dump_trace = false;
    bool dump_activations = false;
    bool dump_checkpoints = false;
    bool resume_skip_existing = false;
    bool progress = true;
};

inline std::size_t resolve_workers(const ExperimentSpec& spec, const RunOptions& opt) {
    if (opt.workers && *opt.workers > 0) return *opt.workers;
    if (const char* env = std::getenv(kWorkersEnv)) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    if (spec.workers > 0) return spec.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Threshold rows: cells are all axes except d_r and the seed; each cell's
/// seed-mean cooperation over the d_r grid gives one collapse threshold.
inline void write_thresholds(const std::filesystem::path& path, const ExperimentSpec& spec,
                             const std::vector<PlannedRun>& plan, const std::map<std::string, double>& coop_by_run) {
    struct Cell {
        const PlannedRun* any = nullptr;
        std::map<double, std::vector<double>> by_dr;
    };
    std::map<std::string, Cell> cells;
    for (const auto& p : plan) {
        auto it = coop_by_run.find(p.run_id);
        if (it == coop_by_run.end() || std::isnan(it->second)) continue;
        std::string key;
        for (const auto& [k, v] : p.labels)
            if (k != "d_r" && k != "d_g") key += (key.empty() ? "" : ";") + k + "=" + v;
        auto& cell = cells[key];
        if (!cell.any) cell.any = &p;
        cell.by_dr[p.config.d_r].push_back(it->second);
    }
    std::ofstream os(path);
    csv::write_row(os, thresholds_csv_header());
    for (const auto& [key, cell] : cells) {
        std::vector<std::pair<double, double>> grid;
        for (const auto& [dr, vals] : cell.by_dr) {
            double s = 0.0;
            for (double v : vals) s += v;
            grid.emplace_back(dr, s / static_cast<double>(vals.size()));
        }
        const auto& c = cell.any->config;
        const double criterion =
            c.architecture == Architecture::Shared ? spec.criterion_shared : spec.criterion_grouped;
        const ThresholdResult tr = collapse_threshold(grid, criterion, spec.strict_threshold);
        const double B = c.schedule.t_anneal >= 2 ? exploration_strength(c.schedule) : c.schedule.tau_init;
        csv::write_row(os, std::vector<std::string>{
                               csv::format(B), csv::format(c.schedule.tau_init), to_string(c.topology.kind),
                               to_string(c.architecture), to_string(c.augmentation), std::to_string(c.topology.L),
                               key.empty() ? "all" : csv::sanitize(key), csv::format(criterion),
                               tr.d_r_star ? csv::format(*tr.d_r_star) : "", to_string(tr.marker),
                               std::to_string(grid.size())});
    }
}

inline void write_trace(const std::filesystem::path& path, const RunResult& r) {
    std::ofstream os(path);
    csv::write_row(os, "t", "c_t", "tau_t");
    for (std::size_t k = 0; k < r.coop_trace.size(); ++k)
        csv::write_row(os, static_cast<std::int64_t>(k + 1), r.coop_trace[k], r.tau_trace[k]);
}

inline void write_activations(const std::filesystem::path& path, const RunResult& r, std::size_t hidden_dim) {
    std::ofstream os(path);
    std::vector<std::string> header;
    for (std::size_t h = 0; h < hidden_dim; ++h) header.push_back("h" + std::to_string(h));
    header.emplace_back("action");
    header.emplace_back("step");
    csv::write_row(os, header);
    const auto& a = r.activations;
    for (std::size_t i = 0; i < a.hidden.size(); ++i) {
        std::vector<std::string> row;
        row.reserve(hidden_dim + 2);
        for (double v : a.hidden.row(i)) row.push_back(csv::format(v));
        row.push_back(std::to_string(encode(a.actions[i])));
        row.push_back(std::to_string(a.steps[i]));
        csv::write_row(os, row);
    }
}

/// Executes a parsed experiment and writes its output bundle.
/// Returns 0 when every run succeeded, 2 when some runs failed, 1 on configuration errors.
inline int run_experiment(ExperimentSpec spec, const RunOptions& opt, std::ostream& log = std::cerr) {
    namespace fs = std::filesystem;
    std::vector<PlannedRun> plan;
    try {
        if (opt.out_dir) spec.out_dir = *opt.out_dir;
        spec.dump_trace = spec.dump_trace || opt.dump_trace;
        spec.dump_activations = spec.dump_activations || opt.dump_activations;
        spec.dump_checkpoints = spec.dump_checkpoints || opt.dump_checkpoints;
        plan = plan_runs(spec);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return 1;
    }
    const fs::path out = spec.out_dir;
    const fs::path runs_path = out / "runs.csv";
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        log << "cannot create output directory '" << out.string() << "': " << ec.message() << '\n';
        return 1;
    }

    std::map<std::string, double> coop_by_run;
    std::vector<std::vector<std::string>> kept_rows;
    if (opt.resume_skip_existing && fs::exists(runs_path)) {
        std::ifstream in(runs_path);
        try {
            const auto table = csv::read(in);
            if (table.header != runs_csv_header()) throw ConfigError("runs.csv header does not match");
            const auto id_col = table.column("run_id"), st_col = table.column("status"),
                       c_col = table.column("coop_mean");
            for (const auto& row : table.rows)
                if (row[st_col] == "ok") {
                    coop_by_run[row[id_col]] = csv::parse_double(row[c_col]);
                    kept_rows.push_back(row);
                }
        } catch (const ConfigError& e) {
            log << "cannot resume: " << e.what() << '\n';
            return 1;
        }
    }

    {
        std::ofstream mf(out / "manifest.json");
        mf << manifest_json(spec, plan).dump(2) << '\n';
    }
    std::ofstream runs_os(runs_path, std::ios::trunc);
    csv::write_row(runs_os, runs_csv_header());
    for (const auto& row : kept_rows) csv::write_row(runs_os, row);
    runs_os.flush();

    const std::size_t total = plan.size();
    std::size_t done = kept_rows.size();
    std::size_t failed = 0;
    if (opt.progress) log << "runs: " << done << "/" << total << " already complete\n";

    auto collect = [&](const PlannedRun& p, SweepOutcome&& o) {
        if (o.result) {
            const RunResult& r = *o.result;
            csv::write_row(runs_os, runs_row(p, &r, "ok"));
            coop_by_run[p.run_id] = r.coop_mean;
            if (spec.dump_trace) write_trace(out / ("trace-" + p.run_id + ".csv"), r);
            if (spec.dump_activations)
                write_activations(out / ("activations-" + p.run_id + ".csv"), r, p.config.hidden_dim);
            if (spec.dump_checkpoints)
                for (std::size_t g = 0; g < r.final_params.size(); ++g) {
                    std::ofstream bin(out / ("checkpoint-" + p.run_id + "-g" + std::to_string(g) + ".bin"),
                                      std::ios::binary);
                    write_params(bin, r.final_params[g]);
                }
        } else {
            ++failed;
            csv::write_row(runs_os, runs_row(p, nullptr, "error: " + o.error));
        }
        runs_os.flush();
        ++done;
        if (opt.progress) log << "runs: " << done << "/" << total << (o.result ? "" : " (failed " + p.run_id + ")") << '\n';
    };
    execute_sweep(plan, resolve_workers(spec, opt), collect,
                  [&](const PlannedRun& p) { return coop_by_run.count(p.run_id) > 0; });

    write_thresholds(out / "thresholds.csv", spec, plan, coop_by_run);
    return failed == 0 ? 0 : 2;
}

} // namespace coopdqn
