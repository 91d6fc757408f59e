#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "kbfid/error.hpp"
#include "kbfid/io_json.hpp"
#include "kbfid/numerics.hpp"
#include "kbfid/rng.hpp"
#include "kbfid/systems.hpp"

namespace kbfid {

/// Per-dimension min-max normalization to [0, 1]. Empty scaler means the data
/// is in raw physical units.
struct Scaler {
    Eigen::VectorXd mins;
    Eigen::VectorXd maxs;

    bool empty() const { return mins.size() == 0; }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& rows_of_states) const {
        Eigen::MatrixXd out = rows_of_states;
        for (Eigen::Index d = 0; d < out.cols(); ++d) {
            out.col(d) = (out.col(d).array() - mins(d)) / (maxs(d) - mins(d));
        }
        return out;
    }

    Eigen::MatrixXd invert(const Eigen::MatrixXd& rows_of_states) const {
        Eigen::MatrixXd out = rows_of_states;
        for (Eigen::Index d = 0; d < out.cols(); ++d) {
            out.col(d) = out.col(d).array() * (maxs(d) - mins(d)) + mins(d);
        }
        return out;
    }
};

/// Sampled state/input trajectories at a fixed rate. Each trajectory stores
/// steps+1 samples (the initial condition plus `steps` integrator steps).
struct TrajectorySet {
    std::string system_name;
    double dt = 0.0;
    int steps = 0;       // L
    int state_dim = 0;   // r
    int input_dim = 0;   // m
    std::vector<Eigen::MatrixXd> states;  // each (L+1) x r
    std::vector<Eigen::MatrixXd> inputs;  // each (L+1) x m
    Scaler scaler;                        // non-empty once normalized
    int discarded = 0;                    // trajectories dropped on blowup

    int count() const { return static_cast<int>(states.size()); }
    bool normalized() const { return !scaler.empty(); }
};

/// How to sample initial conditions and step inputs for data generation.
struct SamplingSpec {
    Eigen::VectorXd x0_lo, x0_hi;  // initial-condition box
    Eigen::VectorXd u_lo, u_hi;    // constant-input box
    int grid = 0;                  // >0: grid points per dimension (2D systems only)
    int count = 0;                 // used when grid == 0: number of random x0
    double dt = 0.08;
    int steps = 25;
    std::uint64_t seed = 0;
    int input_switches = 0;  // extra random input levels per trajectory
    int threads = 1;
};

namespace detail {

inline Eigen::MatrixXd step_input_schedule(Rng& rng, const SamplingSpec& spec, int samples) {
    const Eigen::Index m = spec.u_lo.size();
    Eigen::MatrixXd u(samples, m);
    const int segments = spec.input_switches + 1;
    const int seg_len = (samples + segments - 1) / segments;
    int row = 0;
    for (int s = 0; s < segments && row < samples; ++s) {
        Eigen::RowVectorXd level(m);
        for (Eigen::Index j = 0; j < m; ++j) level(j) = rng.uniform(spec.u_lo(j), spec.u_hi(j));
        const int stop = std::min(samples, row + seg_len);
        for (; row < stop; ++row) u.row(row) = level;
    }
    return u;
}

inline bool rollout(const ControlAffineSystem& sys, const SamplingSpec& spec,
                    const Eigen::VectorXd& x0, const Eigen::MatrixXd& u_schedule,
                    Eigen::MatrixXd& states) {
    states.resize(spec.steps + 1, sys.state_dim);
    states.row(0) = x0.transpose();
    Eigen::VectorXd x = x0;
    auto field = [&sys](const Eigen::VectorXd& xs, const Eigen::VectorXd& us, double) {
        return sys.field(xs, us);
    };
    for (int k = 0; k < spec.steps; ++k) {
        try {
            x = rk4_step(field, x, u_schedule.row(k).transpose(), k * spec.dt, spec.dt);
        } catch (const DivergenceError&) {
            return false;
        }
        states.row(k + 1) = x.transpose();
    }
    return true;
}

}  // namespace detail

/// RK4 rollouts from sampled initial conditions under per-trajectory random
/// step inputs. Deterministic under spec.seed regardless of thread count
/// (every trajectory draws from its own seed substream).
inline TrajectorySet generate(const ControlAffineSystem& sys, const SamplingSpec& spec) {
    if (spec.dt <= 0.0) throw ConfigError("generate: dt must be > 0");
    if (spec.steps < 1) throw ConfigError("generate: steps must be >= 1");
    if (spec.x0_lo.size() != sys.state_dim || spec.x0_hi.size() != sys.state_dim) {
        throw ShapeError("generate: x0 range dimension does not match the system state dim");
    }
    if (spec.u_lo.size() != sys.input_dim || spec.u_hi.size() != sys.input_dim) {
        throw ShapeError("generate: input range dimension does not match the system input dim");
    }

    // Enumerate initial conditions up front so trajectory k is independent of
    // every other trajectory.
    std::vector<Eigen::VectorXd> x0s;
    const Rng base(spec.seed);
    if (spec.grid > 0) {
        if (sys.state_dim != 2) {
            throw ConfigError("generate: --grid sampling is defined for 2D systems only");
        }
        if (spec.grid < 2) throw ConfigError("generate: grid needs at least 2 points per axis");
        for (int i = 0; i < spec.grid; ++i) {
            for (int j = 0; j < spec.grid; ++j) {
                const double a = static_cast<double>(i) / (spec.grid - 1);
                const double b = static_cast<double>(j) / (spec.grid - 1);
                Eigen::Vector2d x0(spec.x0_lo(0) + a * (spec.x0_hi(0) - spec.x0_lo(0)),
                                   spec.x0_lo(1) + b * (spec.x0_hi(1) - spec.x0_lo(1)));
                x0s.push_back(x0);
            }
        }
    } else {
        if (spec.count < 1) throw ConfigError("generate: need either grid > 0 or count >= 1");
        for (int k = 0; k < spec.count; ++k) {
            Rng rng = base.split(static_cast<std::uint64_t>(k));
            Eigen::VectorXd x0(sys.state_dim);
            for (Eigen::Index d = 0; d < x0.size(); ++d) {
                x0(d) = rng.uniform(spec.x0_lo(d), spec.x0_hi(d));
            }
            x0s.push_back(x0);
        }
    }

    const int total = static_cast<int>(x0s.size());
    std::vector<Eigen::MatrixXd> states(total), inputs(total);
    std::vector<char> ok(total, 0);

    auto worker = [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            // The input stream reuses the x0 substream; random x0 dims were
            // drawn first, so draws stay aligned between grid and random mode.
            Rng rng = base.split(static_cast<std::uint64_t>(k));
            if (spec.grid == 0) {
                for (int d = 0; d < sys.state_dim; ++d) rng.uniform01();
            }
            inputs[k] = detail::step_input_schedule(rng, spec, spec.steps + 1);
            ok[k] = detail::rollout(sys, spec, x0s[k], inputs[k], states[k]) ? 1 : 0;
        }
    };

    const int threads = std::max(1, spec.threads);
    if (threads == 1 || total < 2 * threads) {
        worker(0, total);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (total + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(total, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    TrajectorySet out;
    out.system_name = sys.name;
    out.dt = spec.dt;
    out.steps = spec.steps;
    out.state_dim = sys.state_dim;
    out.input_dim = sys.input_dim;
    for (int k = 0; k < total; ++k) {
        if (!ok[k]) {
            ++out.discarded;
            continue;
        }
        out.states.push_back(std::move(states[k]));
        out.inputs.push_back(std::move(inputs[k]));
    }
    return out;
}

/// Min-max normalize states to [0, 1]; ranges are taken over the whole set.
/// Inputs are left in physical units.
inline TrajectorySet normalize(const TrajectorySet& raw) {
    if (raw.normalized()) throw ConfigError("normalize: dataset is already normalized");
    if (raw.count() == 0) throw ConfigError("normalize: empty dataset");
    Eigen::VectorXd mins =
        Eigen::VectorXd::Constant(raw.state_dim, std::numeric_limits<double>::infinity());
    Eigen::VectorXd maxs = -mins;
    for (const auto& traj : raw.states) {
        mins = mins.cwiseMin(traj.colwise().minCoeff().transpose());
        maxs = maxs.cwiseMax(traj.colwise().maxCoeff().transpose());
    }
    for (Eigen::Index d = 0; d < mins.size(); ++d) {
        if (!(maxs(d) > mins(d))) {
            throw DataError("normalize: state dimension " + std::to_string(d) +
                            " is degenerate (max == min)");
        }
    }
    TrajectorySet out = raw;
    out.scaler = Scaler{mins, maxs};
    for (auto& traj : out.states) traj = out.scaler.apply(traj);
    return out;
}

/// Normalize with a scaler fitted elsewhere (e.g. apply the training scaler
/// to test data).
inline TrajectorySet apply_scaler(const TrajectorySet& raw, const Scaler& scaler) {
    if (raw.normalized()) throw ConfigError("apply_scaler: dataset is already normalized");
    if (scaler.mins.size() != raw.state_dim) {
        throw ShapeError("apply_scaler: scaler dimension mismatch");
    }
    TrajectorySet out = raw;
    out.scaler = scaler;
    for (auto& traj : out.states) traj = scaler.apply(traj);
    return out;
}

/// Undo normalization, returning the set to raw units with an empty scaler.
inline TrajectorySet denormalize(const TrajectorySet& normalized) {
    if (!normalized.normalized()) return normalized;
    TrajectorySet out = normalized;
    for (auto& traj : out.states) traj = normalized.scaler.invert(traj);
    out.scaler = Scaler{};
    return out;
}

/// All stride-1 sliding windows of N+1 consecutive samples. An L-step
/// trajectory yields L - N windows (starts 0 .. L-N-1).
struct WindowBatch {
    int horizon = 0;    // N
    int state_dim = 0;  // r
    int input_dim = 0;  // m
    Eigen::MatrixXd states;   // (K*(N+1)) x r, rows grouped window-major
    Eigen::MatrixXd inputs;   // (K*(N+1)) x m
    std::vector<int> source;  // source trajectory of each window

    Eigen::Index count() const { return static_cast<Eigen::Index>(source.size()); }

    auto state(Eigen::Index window, int sample) const {
        return states.row(window * (horizon + 1) + sample);
    }
    auto input(Eigen::Index window, int sample) const {
        return inputs.row(window * (horizon + 1) + sample);
    }

    /// Windows at the given indices, in the given order.
    WindowBatch subset(const std::vector<Eigen::Index>& idx) const {
        WindowBatch out;
        out.horizon = horizon;
        out.state_dim = state_dim;
        out.input_dim = input_dim;
        const int rows_per = horizon + 1;
        out.states.resize(static_cast<Eigen::Index>(idx.size()) * rows_per, state_dim);
        out.inputs.resize(static_cast<Eigen::Index>(idx.size()) * rows_per, input_dim);
        out.source.reserve(idx.size());
        Eigen::Index at = 0;
        for (Eigen::Index w : idx) {
            out.states.middleRows(at * rows_per, rows_per) = states.middleRows(w * rows_per, rows_per);
            out.inputs.middleRows(at * rows_per, rows_per) = inputs.middleRows(w * rows_per, rows_per);
            out.source.push_back(source[static_cast<std::size_t>(w)]);
            ++at;
        }
        return out;
    }

    WindowBatch head(Eigen::Index k) const {
        std::vector<Eigen::Index> idx;
        idx.reserve(static_cast<std::size_t>(std::min(k, count())));
        for (Eigen::Index i = 0; i < std::min(k, count()); ++i) idx.push_back(i);
        return subset(idx);
    }
};

inline WindowBatch windows(const TrajectorySet& ts, int horizon) {
    if (horizon < 1) throw ConfigError("windows: horizon must be >= 1");
    if (horizon > ts.steps) {
        throw ConfigError("windows: horizon " + std::to_string(horizon) +
                          " exceeds trajectory length " + std::to_string(ts.steps));
    }
    const int per_traj = ts.steps - horizon;  // K = L - N
    const Eigen::Index total = static_cast<Eigen::Index>(per_traj) * ts.count();
    WindowBatch out;
    out.horizon = horizon;
    out.state_dim = ts.state_dim;
    out.input_dim = ts.input_dim;
    out.states.resize(total * (horizon + 1), ts.state_dim);
    out.inputs.resize(total * (horizon + 1), ts.input_dim);
    out.source.reserve(static_cast<std::size_t>(total));
    Eigen::Index row = 0;
    for (int k = 0; k < ts.count(); ++k) {
        for (int start = 0; start < per_traj; ++start) {
            out.states.middleRows(row, horizon + 1) = ts.states[k].middleRows(start, horizon + 1);
            out.inputs.middleRows(row, horizon + 1) = ts.inputs[k].middleRows(start, horizon + 1);
            out.source.push_back(k);
            row += horizon + 1;
        }
    }
    return out;
}

inline constexpr int kDatasetFormatVersion = 1;

inline void save(const TrajectorySet& ts, const std::filesystem::path& path) {
    json doc;
    doc["version"] = kDatasetFormatVersion;
    doc["system"] = ts.system_name;
    doc["dt"] = ts.dt;
    doc["steps"] = ts.steps;
    doc["state_dim"] = ts.state_dim;
    doc["input_dim"] = ts.input_dim;
    if (ts.normalized()) {
        doc["scaler"] = {{"mins", vector_to_json(ts.scaler.mins)},
                         {"maxs", vector_to_json(ts.scaler.maxs)}};
    } else {
        doc["scaler"] = nullptr;
    }
    json states = json::array();
    json inputs = json::array();
    for (int k = 0; k < ts.count(); ++k) {
        states.push_back(matrix_to_json(ts.states[static_cast<std::size_t>(k)]));
        inputs.push_back(matrix_to_json(ts.inputs[static_cast<std::size_t>(k)]));
    }
    doc["states"] = std::move(states);
    doc["inputs"] = std::move(inputs);
    write_json_file(path, doc);
}

inline TrajectorySet load_dataset(const std::filesystem::path& path) {
    const json doc = read_json_file(path);
    const int version = require_field<int>(doc, "version", "dataset");
    if (version != kDatasetFormatVersion) {
        throw ParseError("dataset " + path.string() + ": unsupported version " +
                         std::to_string(version));
    }
    TrajectorySet ts;
    ts.system_name = require_field<std::string>(doc, "system", "dataset");
    ts.dt = require_field<double>(doc, "dt", "dataset");
    ts.steps = require_field<int>(doc, "steps", "dataset");
    ts.state_dim = require_field<int>(doc, "state_dim", "dataset");
    ts.input_dim = require_field<int>(doc, "input_dim", "dataset");
    if (!doc.contains("scaler")) throw ParseError("dataset: missing field 'scaler'");
    if (!doc.at("scaler").is_null()) {
        ts.scaler.mins = vector_from_json(doc.at("scaler").at("mins"), "dataset scaler mins");
        ts.scaler.maxs = vector_from_json(doc.at("scaler").at("maxs"), "dataset scaler maxs");
        if (ts.scaler.mins.size() != ts.state_dim || ts.scaler.maxs.size() != ts.state_dim) {
            throw ParseError("dataset: scaler dimension does not match state_dim");
        }
    }
    if (!doc.contains("states") || !doc.contains("inputs")) {
        throw ParseError("dataset: missing states/inputs");
    }
    const json& states = doc.at("states");
    const json& inputs = doc.at("inputs");
    if (states.size() != inputs.size()) {
        throw ParseError("dataset: states and inputs trajectory counts differ");
    }
    for (std::size_t k = 0; k < states.size(); ++k) {
        Eigen::MatrixXd x = matrix_from_json(states[k], "dataset states[" + std::to_string(k) + "]");
        Eigen::MatrixXd u = matrix_from_json(inputs[k], "dataset inputs[" + std::to_string(k) + "]");
        if (x.rows() != ts.steps + 1 || x.cols() != ts.state_dim) {
            throw ParseError("dataset: trajectory " + std::to_string(k) +
                             " state shape does not match declared dims");
        }
        if (u.rows() != ts.steps + 1 || u.cols() != ts.input_dim) {
            throw ParseError("dataset: trajectory " + std::to_string(k) +
                             " input shape does not match declared dims");
        }
        ts.states.push_back(std::move(x));
        ts.inputs.push_back(std::move(u));
    }
    return ts;
}

}  // namespace kbfid
