#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "coopdqn/error.hpp"
#include "coopdqn/simulator.hpp"

namespace coopdqn {

using Json = nlohmann::ordered_json;

/// A sweep axis value: numbers are kept as double, labels as strings.
using AxisValue = std::variant<double, std::string>;

struct Axis {
    std::string name;
    std::vector<AxisValue> values;
};

inline const std::vector<std::string>& known_axes() {
    static const std::vector<std::string> names{"tau_init", "tau_final", "d_r",       "d_g",        "topology",
                                                "architecture", "augmentation", "L",  "n_groups",   "hidden_dim",
                                                "buffer_capacity", "gamma", "n_step",  "loss",       "optimizer",
                                                "eval_mode",   "tau_eval"};
    return names;
}

inline std::string axis_label(const AxisValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    std::ostringstream os;
    os.precision(17);
    os << std::get<double>(v);
    return os.str();
}

struct ExperimentSpec {
    RunConfig base;
    /// When set, d_g follows d_r (base value and sweeps).
    bool diagonal = true;
    std::vector<Axis> axes;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "out";
    /// 0 means available hardware parallelism.
    std::size_t workers = 0;
    bool dump_trace = false;
    bool dump_activations = false;
    bool dump_checkpoints = false;
    double criterion_shared = 0.55;
    double criterion_grouped = 0.15;
    bool strict_threshold = true;
};

namespace detail {

/// Walks a JSON object, remembering which keys were read so leftovers can be reported.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + path_ + "." + it.key() + "'");
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field + ": " + what);
}

} // namespace detail

/// Applies one axis value to a run configuration.
inline void apply_axis(RunConfig& cfg, bool diagonal, const std::string& name, const AxisValue& v) {
    auto num = [&]() -> double {
        if (const auto* d = std::get_if<double>(&v)) return *d;
        throw ConfigError("axis '" + name + "' expects numbers");
    };
    auto str = [&]() -> const std::string& {
        if (const auto* s = std::get_if<std::string>(&v)) return *s;
        throw ConfigError("axis '" + name + "' expects strings");
    };
    auto count = [&]() -> std::size_t {
        const double d = num();
        if (!(d >= 0.0) || d != std::floor(d)) throw ConfigError("axis '" + name + "' expects non-negative integers");
        return static_cast<std::size_t>(d);
    };
    if (name == "tau_init") cfg.schedule.tau_init = num();
    else if (name == "tau_final") cfg.schedule.tau_final = num();
    else if (name == "d_r") {
        cfg.d_r = num();
        if (diagonal) cfg.d_g = cfg.d_r;
    } else if (name == "d_g") cfg.d_g = num();
    else if (name == "topology") cfg.topology.kind = topology_kind_from_string(str());
    else if (name == "architecture") cfg.architecture = architecture_from_string(str());
    else if (name == "augmentation") cfg.augmentation = aug_mode_from_string(str());
    else if (name == "L") cfg.topology.L = count();
    else if (name == "n_groups") cfg.n_groups = count();
    else if (name == "hidden_dim") cfg.hidden_dim = count();
    else if (name == "buffer_capacity") cfg.td.buffer_capacity = count();
    else if (name == "gamma") cfg.td.gamma = num();
    else if (name == "n_step") cfg.td.n_step = count();
    else if (name == "loss") cfg.loss.kind = loss_kind_from_string(str());
    else if (name == "optimizer") cfg.optimizer.kind = optimizer_kind_from_string(str());
    else if (name == "eval_mode") cfg.eval.mode = eval_mode_from_string(str());
    else if (name == "tau_eval") cfg.eval.tau_eval = num();
    else throw ConfigError("unknown sweep axis '" + name + "'");
}

inline ExperimentSpec spec_from_json(const Json& root) {
    ExperimentSpec spec;
    RunConfig& c = spec.base;
    detail::ObjectReader top(root, "spec");

    if (const Json* run = top.child("run")) {
        detail::ObjectReader r(*run, "run");
        if (const Json* topo = r.child("topology")) {
            detail::ObjectReader t(*topo, r.path("topology"));
            std::string kind = to_string(c.topology.kind);
            t.get("kind", kind);
            c.topology.kind = topology_kind_from_string(kind);
            t.get("L", c.topology.L);
            t.get("n", c.topology.n);
            t.get("p_rewire", c.topology.p_rewire);
            t.get("n_modules", c.topology.n_modules);
            t.get("n_cross", c.topology.n_cross);
            t.finish();
        }
        bool d_g_given = false;
        if (const Json* pay = r.child("payoff")) {
            detail::ObjectReader p(*pay, r.path("payoff"));
            p.get("d_r", c.d_r);
            d_g_given = pay->contains("d_g");
            p.get("d_g", c.d_g);
            p.get("diagonal", spec.diagonal);
            p.finish();
            detail::check(c.d_r >= 0.0 && c.d_r <= 1.0, "run.payoff.d_r", "must lie in [0,1]");
            detail::check(c.d_g >= 0.0 && c.d_g <= 1.0, "run.payoff.d_g", "must lie in [0,1]");
        }
        if (spec.diagonal) {
            detail::check(!d_g_given || c.d_g == c.d_r, "run.payoff.d_g", "must equal d_r when diagonal is true");
            c.d_g = c.d_r;
        }
        if (const Json* sch = r.child("schedule")) {
            detail::ObjectReader s(*sch, r.path("schedule"));
            s.get("tau_init", c.schedule.tau_init);
            s.get("tau_final", c.schedule.tau_final);
            s.get("t_anneal", c.schedule.t_anneal);
            s.finish();
        }
        if (const Json* ev = r.child("eval")) {
            detail::ObjectReader e(*ev, r.path("eval"));
            std::string mode = to_string(c.eval.mode);
            e.get("mode", mode);
            c.eval.mode = eval_mode_from_string(mode);
            e.get("tau_eval", c.eval.tau_eval);
            e.finish();
        }
        r.get("t_train", c.t_train);
        r.get("t_eval", c.t_eval);
        if (const Json* td = r.child("td")) {
            detail::ObjectReader d(*td, r.path("td"));
            d.get("gamma", c.td.gamma);
            d.get("n_step", c.td.n_step);
            d.get("batch_size", c.td.batch_size);
            c.td.warmup = c.td.batch_size;
            d.get("warmup", c.td.warmup);
            d.get("target_sync_interval", c.td.target_sync_interval);
            d.get("buffer_capacity", c.td.buffer_capacity);
            d.get("grad_clip", c.td.grad_clip);
            d.get("updates_per_step", c.updates_per_step);
            d.get("shared_replay", c.shared_replay);
            d.finish();
        }
        if (const Json* lo = r.child("loss")) {
            detail::ObjectReader l(*lo, r.path("loss"));
            std::string kind = to_string(c.loss.kind);
            l.get("kind", kind);
            c.loss.kind = loss_kind_from_string(kind);
            l.get("delta", c.loss.delta);
            l.finish();
        }
        if (const Json* op = r.child("optimizer")) {
            detail::ObjectReader o(*op, r.path("optimizer"));
            std::string kind = to_string(c.optimizer.kind);
            o.get("kind", kind);
            c.optimizer.kind = optimizer_kind_from_string(kind);
            o.get("lr", c.optimizer.lr);
            o.get("weight_decay", c.optimizer.weight_decay);
            o.get("beta1", c.optimizer.beta1);
            o.get("beta2", c.optimizer.beta2);
            o.get("eps", c.optimizer.eps);
            o.get("rms_alpha", c.optimizer.rms_alpha);
            o.finish();
        }
        r.get("hidden_dim", c.hidden_dim);
        if (const Json* ar = r.child("architecture")) {
            detail::ObjectReader a(*ar, r.path("architecture"));
            std::string kind = to_string(c.architecture);
            a.get("kind", kind);
            c.architecture = architecture_from_string(kind);
            a.get("n_groups", c.n_groups);
            a.finish();
        }
        std::string aug = to_string(c.augmentation);
        r.get("augmentation", aug);
        c.augmentation = aug_mode_from_string(aug);
        r.get("activation_samples", c.activation_samples);
        r.get("initial_coop_prob", c.initial_coop_prob);
        r.finish();
    }

    if (const Json* sw = top.child("sweep")) {
        detail::ObjectReader s(*sw, "sweep");
        if (const Json* axes = s.child("axes")) {
            if (!axes->is_object()) throw ConfigError("sweep.axes: expected an object");
            for (auto it = axes->begin(); it != axes->end(); ++it) {
                const std::string field = "sweep.axes." + it.key();
                bool known = false;
                for (const auto& k : known_axes()) known = known || k == it.key();
                if (!known) throw ConfigError("unknown key '" + field + "'");
                if (!it.value().is_array() || it.value().empty())
                    throw ConfigError(field + ": expected a non-empty array");
                Axis ax{it.key(), {}};
                for (const auto& v : it.value()) {
                    if (v.is_number()) ax.values.emplace_back(v.get<double>());
                    else if (v.is_string()) ax.values.emplace_back(v.get<std::string>());
                    else throw ConfigError(field + ": values must be numbers or strings");
                }
                spec.axes.push_back(std::move(ax));
            }
        }
        s.get("seeds", spec.seeds);
        s.finish();
        detail::check(!spec.seeds.empty(), "sweep.seeds", "must not be empty");
    }

    if (const Json* out = top.child("output")) {
        detail::ObjectReader o(*out, "output");
        o.get("dir", spec.out_dir);
        o.get("workers", spec.workers);
        o.get("dump_trace", spec.dump_trace);
        o.get("dump_activations", spec.dump_activations);
        o.get("dump_checkpoints", spec.dump_checkpoints);
        o.finish();
    }

    if (const Json* an = top.child("analysis")) {
        detail::ObjectReader a(*an, "analysis");
        a.get("criterion_shared", spec.criterion_shared);
        a.get("criterion_grouped", spec.criterion_grouped);
        a.get("strict", spec.strict_threshold);
        a.finish();
    }
    top.finish();

    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("run: ") + e.what());
    }
    // every cell of the sweep must be a valid configuration too
    for (const auto& ax : spec.axes)
        for (const auto& v : ax.values) {
            RunConfig probe = c;
            try {
                apply_axis(probe, spec.diagonal, ax.name, v);
                probe.validate();
            } catch (const ConfigError& e) {
                throw ConfigError("sweep.axes." + ax.name + " = " + axis_label(v) + ": " + e.what());
            }
        }
    return spec;
}

inline Json spec_to_json(const ExperimentSpec& spec) {
    const RunConfig& c = spec.base;
    Json run;
    run["topology"] = {{"kind", to_string(c.topology.kind)}, {"L", c.topology.L},
                       {"n", c.topology.n},                  {"p_rewire", c.topology.p_rewire},
                       {"n_modules", c.topology.n_modules},  {"n_cross", c.topology.n_cross}};
    run["payoff"] = {{"d_r", c.d_r}, {"d_g", c.d_g}, {"diagonal", spec.diagonal}};
    run["schedule"] = {{"tau_init", c.schedule.tau_init},
                       {"tau_final", c.schedule.tau_final},
                       {"t_anneal", c.schedule.t_anneal}};
    run["eval"] = {{"mode", to_string(c.eval.mode)}, {"tau_eval", c.eval.tau_eval}};
    run["t_train"] = c.t_train;
    run["t_eval"] = c.t_eval;
    run["td"] = {{"gamma", c.td.gamma},
                 {"n_step", c.td.n_step},
                 {"batch_size", c.td.batch_size},
                 {"warmup", c.td.warmup},
                 {"target_sync_interval", c.td.target_sync_interval},
                 {"buffer_capacity", c.td.buffer_capacity},
                 {"grad_clip", c.td.grad_clip},
                 {"updates_per_step", c.updates_per_step},
                 {"shared_replay", c.shared_replay}};
    run["loss"] = {{"kind", to_string(c.loss.kind)}, {"delta", c.loss.delta}};
    run["optimizer"] = {{"kind", to_string(c.optimizer.kind)}, {"lr", c.optimizer.lr},
                        {"weight_decay", c.optimizer.weight_decay}, {"beta1", c.optimizer.beta1},
                        {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps},
                        {"rms_alpha", c.optimizer.rms_alpha}};
    run["hidden_dim"] = c.hidden_dim;
    run["architecture"] = {{"kind", to_string(c.architecture)}, {"n_groups", c.n_groups}};
    run["augmentation"] = to_string(c.augmentation);
    run["activation_samples"] = c.activation_samples;
    run["initial_coop_prob"] = c.initial_coop_prob;

    Json axes = Json::object();
    for (const auto& ax : spec.axes) {
        Json arr = Json::array();
        for (const auto& v : ax.values) std::visit([&arr](const auto& x) { arr.push_back(x); }, v);
        axes[ax.name] = std::move(arr);
    }
    Json root;
    root["run"] = std::move(run);
    root["sweep"] = {{"axes", std::move(axes)}, {"seeds", spec.seeds}};
    root["output"] = {{"dir", spec.out_dir},
                      {"workers", spec.workers},
                      {"dump_trace", spec.dump_trace},
                      {"dump_activations", spec.dump_activations},
                      {"dump_checkpoints", spec.dump_checkpoints}};
    root["analysis"] = {{"criterion_shared", spec.criterion_shared},
                        {"criterion_grouped", spec.criterion_grouped},
                        {"strict", spec.strict_threshold}};
    return root;
}

inline ExperimentSpec parse_spec_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
    }
    return spec_from_json(j);
}

inline ExperimentSpec parse_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spec file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec_text(ss.str());
}

} // namespace coopdqn
