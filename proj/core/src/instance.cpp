#include "ompn/instance.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ompn/errors.hpp"
#include "ompn/rng.hpp"

namespace ompn {

using json = nlohmann::ordered_json;

std::string format_real(double value) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ValidationError("cannot parse real number '" + text + "'");
  }
  return value;
}

std::vector<Neighborhood> Instance::neighborhoods() const {
  std::vector<Neighborhood> out;
  out.reserve(sites.size());
  for (int j = 0; j < n(); ++j) out.push_back(neighborhood(j));
  return out;
}

void Instance::validate() const {
  if (dim < 1) throw ValidationError("dim: must be >= 1, got " + std::to_string(dim));
  const std::size_t count = sites.size();
  if (count == 0) throw ValidationError("sites: instance has no sites");
  if (p < 1 || static_cast<std::size_t>(p) > count) {
    throw ValidationError("p: must be in [1, n] = [1, " + std::to_string(count) +
                          "], got " + std::to_string(p));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (sites[i].size() != static_cast<std::size_t>(dim)) {
      throw ValidationError("sites[" + std::to_string(i) + "]: has " +
                            std::to_string(sites[i].size()) +
                            " coordinates, expected dim = " + std::to_string(dim));
    }
    for (std::size_t k = 0; k < sites[i].size(); ++k) {
      if (!std::isfinite(sites[i][k])) {
        throw ValidationError("sites[" + std::to_string(i) + "][" +
                              std::to_string(k) + "]: not finite");
      }
    }
  }
  if (radii.size() != count) {
    throw ValidationError("radii: has " + std::to_string(radii.size()) +
                          " entries, expected n = " + std::to_string(count));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!(radii[i] >= 0.0) || !std::isfinite(radii[i])) {
      throw ValidationError("radii[" + std::to_string(i) +
                            "]: must be finite and >= 0, got " +
                            format_real(radii[i]));
    }
  }
  if (setup_costs.size() != count) {
    throw ValidationError("setup_costs: has " + std::to_string(setup_costs.size()) +
                          " entries, expected n = " + std::to_string(count));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!(setup_costs[i] >= 0.0) || !std::isfinite(setup_costs[i])) {
      throw ValidationError("setup_costs[" + std::to_string(i) +
                            "]: must be finite and >= 0, got " +
                            format_real(setup_costs[i]));
    }
  }
  if (lambda.size() != count) {
    throw ValidationError("lambda: has " + std::to_string(lambda.size()) +
                          " weights, expected n = " + std::to_string(count));
  }
}

BoundsMatrix compute_bounds(const Instance& instance) {
  return compute_bounds(instance.sites, instance.neighborhoods(),
                        instance.distance_norm);
}

namespace {

json lambda_to_json(const LambdaVector& lambda) {
  json out = json::object();
  const std::string& preset = lambda.preset_name();
  if (preset == "median" || preset == "center") {
    out["preset"] = preset;
  } else if (preset == "kcentrum") {
    out["preset"] = preset;
    out["k"] = lambda.preset_params().k;
  } else if (preset == "centdian") {
    out["preset"] = preset;
    out["alpha"] = format_real(lambda.preset_params().alpha);
  } else {
    json weights = json::array();
    for (double w : lambda.weights()) weights.push_back(format_real(w));
    out["weights"] = std::move(weights);
  }
  return out;
}

double real_from_json(const json& v, const std::string& field) {
  if (v.is_string()) return parse_real(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw ValidationError(field + ": expected a number or numeric string");
}

LambdaVector lambda_from_json(const json& v, std::size_t n) {
  if (v.is_array()) {
    std::vector<double> weights;
    weights.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      weights.push_back(real_from_json(v[k], "lambda[" + std::to_string(k) + "]"));
    return LambdaVector::from_weights(std::move(weights));
  }
  if (!v.is_object()) {
    throw ValidationError("lambda: expected an object or an array of weights");
  }
  if (v.contains("weights")) return lambda_from_json(v.at("weights"), n);
  if (!v.contains("preset")) {
    throw ValidationError("lambda: object needs either 'preset' or 'weights'");
  }
  const std::string preset = v.at("preset").get<std::string>();
  LambdaParams params;
  if (preset == "median") return LambdaVector::make(LambdaPreset::median, n);
  if (preset == "center") return LambdaVector::make(LambdaPreset::center, n);
  if (preset == "kcentrum") {
    if (!v.contains("k")) throw ValidationError("lambda: kcentrum needs 'k'");
    params.k = v.at("k").get<int>();
    return LambdaVector::make(LambdaPreset::kcentrum, n, params);
  }
  if (preset == "centdian") {
    if (!v.contains("alpha")) throw ValidationError("lambda: centdian needs 'alpha'");
    params.alpha = real_from_json(v.at("alpha"), "lambda.alpha");
    return LambdaVector::make(LambdaPreset::centdian, n, params);
  }
  throw ValidationError("lambda: unknown preset '" + preset + "'");
}

json reals_to_json(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(format_real(v));
  return out;
}

std::vector<double> reals_from_json(const json& v, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(real_from_json(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

std::string instance_to_json(const Instance& instance) {
  json out = json::object();
  out["format"] = "ompn-instance";
  out["version"] = 1;
  if (!instance.name.empty()) out["name"] = instance.name;
  out["dim"] = instance.dim;
  out["p"] = instance.p;
  out["distance_norm"] = instance.distance_norm.to_string();
  out["ball_norm"] = instance.ball_norm.to_string();
  out["lambda"] = lambda_to_json(instance.lambda);
  json sites = json::array();
  for (const Point& a : instance.sites) sites.push_back(reals_to_json(a));
  out["points"] = std::move(sites);
  out["radii"] = reals_to_json(instance.radii);
  out["setup_costs"] = reals_to_json(instance.setup_costs);
  return out.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("instance: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ValidationError("instance: expected a JSON object");
    if (doc.contains("format") &&
        doc.at("format").get<std::string>() != "ompn-instance") {
      throw ValidationError("instance: unexpected format tag '" +
                            doc.at("format").get<std::string>() + "'");
    }
    Instance out;
    if (doc.contains("name")) out.name = doc.at("name").get<std::string>();
    out.dim = doc.at("dim").get<int>();
    out.p = doc.at("p").get<int>();
    out.distance_norm = NormSpec::parse(doc.at("distance_norm").get<std::string>());
    out.ball_norm = NormSpec::parse(doc.at("ball_norm").get<std::string>());
    const json& sites = doc.at("points");
    if (!sites.is_array()) throw ValidationError("sites: expected an array");
    out.sites.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      out.sites.push_back(
          reals_from_json(sites[i], "sites[" + std::to_string(i) + "]"));
    }
    out.radii = reals_from_json(doc.at("radii"), "radii");
    out.setup_costs = reals_from_json(doc.at("setup_costs"), "setup_costs");
    out.lambda = lambda_from_json(doc.at("lambda"), out.sites.size());
    out.validate();
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("instance: ") + e.what());
  }
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open instance file '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  return instance_from_json(buf.str());
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << instance_to_json(instance);
  if (!out) throw IoError("error while writing '" + path + "'");
}

std::string content_hash(const Instance& instance) {
  Instance canonical = instance;
  canonical.name.clear();
  // Hash over the canonical text with explicit weights so the hash does not
  // depend on whether lambda came from a preset or an explicit vector.
  canonical.lambda = LambdaVector::from_weights(instance.lambda.weights());
  const std::string text = instance_to_json(canonical);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << "0x" << std::hex << h;
  return hex.str();
}

ScenarioRange scenario_range(int scenario) {
  if (scenario < 1 || scenario > 4) {
    throw ValidationError("scenario: must be in [1, 4], got " +
                          std::to_string(scenario));
  }
  return ScenarioRange{5.0 * (scenario - 1), 5.0 * scenario};
}

Instance make_random_instance(int n, int dim, int scenario, int p,
                              const LambdaVector& lambda, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n: must be >= 1, got " + std::to_string(n));
  if (dim < 1) throw ValidationError("dim: must be >= 1, got " + std::to_string(dim));
  const ScenarioRange range = scenario_range(scenario);
  Instance out;
  out.name = "random-n" + std::to_string(n) + "-d" + std::to_string(dim) +
             "-sc" + std::to_string(scenario) + "-seed" + std::to_string(seed);
  out.dim = dim;
  out.p = p;
  Rng rng(seed);
  out.sites.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Point a(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) a[static_cast<std::size_t>(k)] = rng.uniform(0.0, 100.0);
    out.sites.push_back(std::move(a));
  }
  out.radii.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.radii.push_back(rng.uniform(range.lo, range.hi));
  out.setup_costs = out.radii;
  out.lambda = lambda;
  out.validate();
  return out;
}

namespace {

constexpr std::array<std::array<double, 2>, 49> kUs49Sites = {{
    {33.7296, 32.7794}, {8.8981, 34.2744},  {28.1157, 34.8938},
    {1.0887, 37.1841},  {15.0105, 38.9972}, {43.5436, 38.9101},
    {47.831, 41.6219},  {45.0533, 38.9896}, {38.1086, 28.6305},
    {37.1157, 32.6415}, {5.9453, 44.3509},  {31.3618, 40.0417},
    {34.2767, 39.8942}, {27.0623, 42.0751}, {22.1779, 38.4937},
    {35.2562, 37.5347}, {28.5615, 31.0689}, {51.3155, 45.3695},
    {43.7674, 39.055},  {48.75, 42.2596},   {35.1481, 44.3467},
    {26.253, 46.2807},  {30.8905, 32.7364}, {28.1003, 38.3566},
    {10.925, 47.0527},  {20.7632, 41.5378}, {3.9271, 39.3289},
    {48.9772, 43.6805}, {45.8855, 40.1907}, {14.4457, 34.4071},
    {45.0315, 42.9538}, {41.1706, 35.5557}, {20.0924, 47.4501},
    {37.7646, 40.2862}, {23.064, 35.5889},  {0.0, 43.9336},
    {42.7587, 40.8781}, {49.0021, 41.6762}, {39.6619, 33.9169},
    {20.332, 44.4443},  {34.2078, 35.858},  {21.2271, 31.4757},
    {8.888, 39.3055},   {47.8925, 44.0687}, {41.7046, 37.5215},
    {0.1111, 47.3826},  {39.9356, 38.6409}, {30.5642, 44.6243},
    {13.0071, 42.9957},
}};

constexpr std::array<double, 49> kUs49Radii = {
    2.078845, 3.065549, 2.093835, 3.673593, 2.929448, 0.676016, 0.452971,
    0.075061, 2.328347, 2.213393, 2.624804, 2.18506,  1.732769, 2.153889,
    2.604455, 1.825186, 2.078018, 1.707855, 1.011317, 0.932809, 2.823694,
    2.677155, 1.998203, 2.397241, 3.481699, 2.525213, 3.019231, 0.877927,
    0.847994, 3.166089, 2.12076,  2.106408, 2.41423,  1.922372, 2.400539,
    2.847895, 1.948538, 0.356869, 1.624758, 2.521423, 1.863987, 4.7057,
    2.645574, 0.890383, 1.877887, 2.424447, 1.41336,  2.323715, 2.839701,
};

}  // namespace

Instance builtin_us49(int scale, int p, const LambdaVector& lambda) {
  if (scale < 1 || scale > 3) {
    throw ValidationError("scale: must be in [1, 3], got " + std::to_string(scale));
  }
  Instance out;
  out.name = "us49-s" + std::to_string(scale);
  out.dim = 2;
  out.p = p;
  out.sites.reserve(kUs49Sites.size());
  for (const auto& a : kUs49Sites) out.sites.push_back(Point{a[0], a[1]});
  out.radii.reserve(kUs49Radii.size());
  for (double r : kUs49Radii) out.radii.push_back(r * scale);
  out.setup_costs = out.radii;
  out.lambda = lambda;
  out.validate();
  return out;
}

Instance builtin_example5(bool setup_from_radius) {
  Instance out;
  out.name = "example5";
  out.dim = 2;
  out.p = 2;
  out.sites = {Point{2.0, 92.0}, Point{33.0, 70.0}, Point{65.0, 50.0},
               Point{73.0, 69.0}, Point{40.0, 63.0}};
  out.radii = {2.0, 1.0, 0.05, 5.0, 1.0};
  out.setup_costs = setup_from_radius ? out.radii
                                      : std::vector<double>(out.sites.size(), 0.0);
  out.lambda = LambdaVector::make(LambdaPreset::median, out.sites.size());
  out.validate();
  return out;
}

}  // namespace ompn
