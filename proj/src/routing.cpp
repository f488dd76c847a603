#include <cmath>
#include <fstream>

#include "assembly/evaluator.hpp"
#include "assembly/rng.hpp"

namespace assembly {

namespace {

constexpr double kRowTolerance = 1e-9;

double unit_entry(const nlohmann::json& v, const char* what, std::size_t i, std::size_t j) {
  if (!v.is_number()) {
    throw Error(ErrorKind::Spec, std::string(what) + "[" + std::to_string(i) + "][" + std::to_string(j) +
                                     "] must be a number");
  }
  return v.get<double>();
}

template <class F>
void for_matrix(const nlohmann::json& m, const char* what, F&& f) {
  if (!m.is_array() || m.size() != kTaskCount) {
    throw Error(ErrorKind::Spec, std::string(what) + " must be an 8x8 matrix");
  }
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    if (!m[i].is_array() || m[i].size() != kTaskCount) {
      throw Error(ErrorKind::Spec, std::string(what) + " row " + std::to_string(i) + " must have 8 entries");
    }
    for (std::size_t j = 0; j < kTaskCount; ++j) f(i, j, m[i][j]);
  }
}

}  // namespace

TaskMatrix<double> oracle_routing() {
  TaskMatrix<double> m{};
  for (std::size_t t = 0; t < kTaskCount; ++t) m[t][t] = 1.0;
  return m;
}

TaskMatrix<double> uniform_routing() {
  TaskMatrix<double> m{};
  for (auto& row : m) row.fill(1.0 / kTaskCount);
  return m;
}

void RoutingSpec::validate() const {
  for (std::size_t m = 0; m < kTaskCount; ++m) {
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      const auto& a = accuracy[m][t];
      if (a && !(*a >= 0.0 && *a <= 1.0)) {
        throw Error(ErrorKind::Spec, "accuracy[" + std::to_string(m) + "][" + std::to_string(t) + "] outside [0,1]");
      }
    }
  }
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    double sum = 0;
    for (std::size_t m = 0; m < kTaskCount; ++m) {
      const double w = routing[t][m];
      if (!(w >= 0.0 && w <= 1.0)) {
        throw Error(ErrorKind::Spec, "routing[" + std::to_string(t) + "][" + std::to_string(m) + "] outside [0,1]");
      }
      if (w > 0 && !accuracy[m][t]) {
        throw Error(ErrorKind::Spec, "task " + TaskKind::from_index(t).label() + " routes to model " +
                                         std::to_string(m) + " whose accuracy on it is unknown");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw Error(ErrorKind::Spec, "routing row " + std::to_string(t) + " sums to " + std::to_string(sum));
    }
  }
}

RoutingSpec RoutingSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("accuracy") || !doc.contains("routing")) {
    throw Error(ErrorKind::Spec, "routing spec needs \"accuracy\" and \"routing\"");
  }
  RoutingSpec spec;
  const auto& acc = doc.at("accuracy");
  if (acc.is_object()) {
    const auto it = acc.find("diagonal");
    if (it == acc.end() || !it->is_array() || it->size() != kTaskCount) {
      throw Error(ErrorKind::Spec, "accuracy.diagonal must list 8 values");
    }
    for (std::size_t t = 0; t < kTaskCount; ++t) spec.accuracy[t][t] = unit_entry((*it)[t], "diagonal", t, t);
  } else {
    for_matrix(acc, "accuracy", [&](std::size_t i, std::size_t j, const nlohmann::json& v) {
      if (!v.is_null()) spec.accuracy[i][j] = unit_entry(v, "accuracy", i, j);
    });
  }
  const auto& routing = doc.at("routing");
  if (routing == "oracle") {
    spec.routing = oracle_routing();
  } else if (routing == "uniform") {
    spec.routing = uniform_routing();
  } else {
    for_matrix(routing, "routing", [&](std::size_t i, std::size_t j, const nlohmann::json& v) {
      spec.routing[i][j] = unit_entry(v, "routing", i, j);
    });
  }
  spec.validate();
  return spec;
}

RoutingSpec RoutingSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read routing spec " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::Spec, "routing spec " + path.string() + " is not valid JSON");
  return from_json(doc);
}

Composite route_composite(const RoutingSpec& spec) {
  spec.validate();
  Composite c;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    double sum = 0;
    for (std::size_t m = 0; m < kTaskCount; ++m) {
      if (spec.routing[t][m] > 0) sum += spec.routing[t][m] * *spec.accuracy[m][t];
    }
    c.per_task[t] = sum;
    c.average += sum;
  }
  c.average /= kTaskCount;
  return c;
}

Simulation simulate_routing(const RoutingSpec& spec, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::Spec, "simulation needs at least one trial");
  const auto closed = route_composite(spec);
  Rng rng(seed);
  std::array<std::size_t, kTaskCount> hits{};
  for (std::size_t n = 0; n < trials; ++n) {
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      const double u = rng.unit();
      std::size_t model = kTaskCount - 1;
      double acc = 0;
      for (std::size_t m = 0; m < kTaskCount; ++m) {
        acc += spec.routing[t][m];
        if (u < acc && spec.routing[t][m] > 0) {
          model = m;
          break;
        }
      }
      // Rounding can leave u past the cumulative sum; fall back to the last routed model.
      while (spec.routing[t][model] == 0 && model > 0) --model;
      if (rng.unit() < *spec.accuracy[model][t]) ++hits[t];
    }
  }
  Simulation sim;
  sim.trials = trials;
  double var_sum = 0;
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    sim.per_task[t] = static_cast<double>(hits[t]) / static_cast<double>(trials);
    sim.average += sim.per_task[t];
    const double p = closed.per_task[t];
    const double var = p * (1 - p) / static_cast<double>(trials);
    sim.sigma[t] = std::sqrt(var);
    var_sum += var;
  }
  sim.average /= kTaskCount;
  sim.average_sigma = std::sqrt(var_sum) / kTaskCount;
  return sim;
}

}  // namespace assembly
