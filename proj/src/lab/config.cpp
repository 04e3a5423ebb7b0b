#include "flowlab/lab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "flowlab/errors.hpp"

namespace flowlab::lab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Config, (path.empty() ? std::string("/") : path) + ": " + what);
}

// Reads one JSON object; every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = convert<T>(node_.at(key), at(key));
  }

  template <typename T>
  void read_vector(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_array()) fail(at(key), "expected an array");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert<T>(v[i], at(key) + "/" + std::to_string(i)));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (std::is_unsigned_v<T> ? !v.is_number_unsigned() : !v.is_number_integer()) {
        fail(path, std::is_unsigned_v<T> ? "expected a nonnegative integer" : "expected an integer");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) fail(path, "expected a number");
      return v.get<T>();
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

BaseMapSpec read_base_map(const json& node, const std::string& path) {
  Reader r(node, path);
  BaseMapSpec s;
  r.read("kind", s.kind);
  if (r.has("matrix")) {
    const json& m = r.raw("matrix");
    check(m.is_array() && !m.empty(), r.at("matrix"), "expected a nonempty array of rows");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string row_path = r.at("matrix") + "/" + std::to_string(i);
      check(m[i].is_array(), row_path, "expected an array");
      std::vector<long long> row;
      for (std::size_t j = 0; j < m[i].size(); ++j) {
        row.push_back(Reader::convert<long long>(m[i][j], row_path + "/" + std::to_string(j)));
      }
      s.matrix.push_back(std::move(row));
    }
  }
  r.read_vector("angles", s.angles);
  r.read("dim", s.dim);
  r.finish();
  static const std::set<std::string> kinds = {"cat", "golden_rotation", "identity", "toral_automorphism", "rotation"};
  check(kinds.count(s.kind) > 0, r.at("kind"),
        "must be one of cat, golden_rotation, identity, toral_automorphism, rotation");
  if (s.kind == "toral_automorphism") check(!s.matrix.empty(), r.at("matrix"), "required for toral_automorphism");
  if (s.kind == "rotation") check(!s.angles.empty(), r.at("angles"), "required for rotation");
  check(s.dim >= 1 && s.dim <= kMaxTorusDim, r.at("dim"), "must lie in [1, 16]");
  try {
    s.build();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return s;
}

StoppedPointSpec read_point(const json& node, const std::string& path) {
  Reader r(node, path);
  StoppedPointSpec s;
  r.read_vector("base", s.base);
  r.read("height", s.height);
  r.finish();
  for (std::size_t i = 0; i < s.base.size(); ++i) {
    check(s.base[i] >= 0.0 && s.base[i] < 1.0, r.at("base") + "/" + std::to_string(i), "must lie in [0, 1)");
  }
  check(s.height >= 0.0 && s.height < 1.0, r.at("height"), "must lie in [0, 1)");
  return s;
}

FieldSpec read_field(const json& node, const std::string& path) {
  Reader r(node, path);
  FieldSpec s;
  r.read("kind", s.kind);
  r.read("value", s.value);
  r.read("floor_depth", s.floor_depth);
  r.read("chart_radius", s.chart_radius);
  if (r.has("p")) s.p = read_point(r.raw("p"), r.at("p"));
  r.finish();
  check(s.kind == "constant" || s.kind == "flat" || s.kind == "quadratic", r.at("kind"),
        "must be constant, flat or quadratic");
  check(s.value > 0.0, r.at("value"), "must be positive");
  check(s.floor_depth >= 0, r.at("floor_depth"), "must be nonnegative");
  check(s.chart_radius > 0.0 && s.chart_radius < 0.25, r.at("chart_radius"), "must lie in (0, 1/4)");
  return s;
}

void read_sampling(const json& node, const std::string& path, BirkhoffOptions& s) {
  Reader r(node, path);
  r.read("count", s.count);
  r.read("burn_in", s.burn_in);
  r.read("chains", s.chains);
  r.read("stride", s.stride);
  r.finish();
  check(s.count >= 1, r.at("count"), "must be at least 1");
  check(s.stride >= 1, r.at("stride"), "must be at least 1");
}

void read_grid(const json& node, const std::string& path, EntropyGridSpec& s) {
  Reader r(node, path);
  r.read("delta", s.delta);
  r.read_vector("n_values", s.n_values);
  r.read_vector("eps_values", s.eps_values);
  r.read("time_step", s.time_step);
  r.read("saturation_fraction", s.saturation_fraction);
  if (r.has("method")) {
    const std::string m = Reader::convert<std::string>(r.raw("method"), r.at("method"));
    try {
      s.method = count_method_from_string(m);
    } catch (const Error&) {
      fail(r.at("method"), "must be greedy_cover or max_separated");
    }
  }
  r.finish();
  try {
    validate(s);
  } catch (const Error& e) {
    fail(path, e.what());
  }
}

void read_profile(const json& node, const std::string& path, ProfileSpec& s) {
  Reader r(node, path);
  r.read("i0", s.i0);
  r.read("count", s.count);
  r.read("l_scale", s.l_scale);
  r.read("truncation_tol", s.truncation_tol);
  r.read("recurrence", s.recurrence);
  r.read("recurrence_starts", s.recurrence_starts);
  r.read_vector("betas", s.betas);
  r.finish();
  check(s.i0 >= 0, r.at("i0"), "must be nonnegative");
  check(s.count >= 1 && s.count <= 256, r.at("count"), "must lie in [1, 256]");
  check(s.l_scale > 0.0 && s.l_scale < 1.0, r.at("l_scale"), "must lie in (0, 1)");
  check(s.truncation_tol > 0.0, r.at("truncation_tol"), "must be positive");
  check(s.recurrence == "auto" || s.recurrence == "certified" || s.recurrence == "empirical", r.at("recurrence"),
        "must be auto, certified or empirical");
  check(s.recurrence_starts >= 1, r.at("recurrence_starts"), "must be at least 1");
  if (!s.betas.empty()) {
    check(s.betas.front() == 1.0, r.at("betas") + "/0", "beta_{-1} must be 1");
    for (std::size_t i = 1; i < s.betas.size(); ++i) {
      check(s.betas[i] > 0.0 && s.betas[i] < s.betas[i - 1], r.at("betas") + "/" + std::to_string(i),
            "betas must be positive and strictly decreasing");
    }
  }
}

void read_flatfn(const json& node, const std::string& path, FlatFnSection& s) {
  Reader r(node, path);
  r.read("grid_points", s.grid_points);
  r.read("t_min", s.t_min);
  r.read("t_max", s.t_max);
  r.read("shells", s.shells);
  r.read("per_shell", s.per_shell);
  r.read("derivative_exponents", s.derivative_exponents);
  r.finish();
  check(s.grid_points >= 2, r.at("grid_points"), "must be at least 2");
  check(s.t_min > 0.0 && s.t_min < s.t_max, r.at("t_min"), "must lie in (0, t_max)");
  check(s.t_max <= 2.0, r.at("t_max"), "must not exceed 2");
  check(s.shells >= 1, r.at("shells"), "must be at least 1");
  check(s.per_shell >= 1, r.at("per_shell"), "must be at least 1");
  check(s.derivative_exponents >= 1 && s.derivative_exponents <= 8, r.at("derivative_exponents"),
        "must lie in [1, 8]");
}

void read_entropy(const json& node, const std::string& path, EntropySection& s) {
  Reader r(node, path);
  r.read("map", s.map);
  r.read("suspension", s.suspension);
  if (r.has("time_change")) {
    const json& tc = r.raw("time_change");
    if (!tc.is_null()) s.time_change = read_field(tc, r.at("time_change"));
  }
  r.read("totoki", s.totoki);
  if (r.has("alt_delta")) {
    const json& d = r.raw("alt_delta");
    if (!d.is_null()) {
      s.alt_delta = Reader::convert<double>(d, r.at("alt_delta"));
      check(*s.alt_delta > 0.0 && *s.alt_delta < 1.0, r.at("alt_delta"), "must lie in (0, 1)");
    }
  }
  r.finish();
}

void read_recurrence(const json& node, const std::string& path, RecurrenceSection& s) {
  Reader r(node, path);
  r.read_vector("eps_values", s.eps_values);
  r.read("grid_resolution", s.grid_resolution);
  r.read("horizon", s.horizon);
  r.read("centers", s.centers);
  r.read("orbit_length", s.orbit_length);
  r.finish();
  check(!s.eps_values.empty(), r.at("eps_values"), "must not be empty");
  for (std::size_t i = 0; i < s.eps_values.size(); ++i) {
    check(s.eps_values[i] > 0.0, r.at("eps_values") + "/" + std::to_string(i), "must be positive");
  }
  check(s.grid_resolution >= 0.0, r.at("grid_resolution"), "must be nonnegative");
  check(s.horizon >= 1, r.at("horizon"), "must be at least 1");
  check(s.centers >= 0, r.at("centers"), "must be nonnegative");
  check(s.orbit_length >= 1, r.at("orbit_length"), "must be at least 1");
}

void read_timechange(const json& node, const std::string& path, TimeChangeSection& s) {
  Reader r(node, path);
  if (r.has("field")) s.field = read_field(r.raw("field"), r.at("field"));
  r.read("checks", s.checks);
  r.read("max_time", s.max_time);
  r.read("constant_rate", s.constant_rate);
  r.read("inversion_tol", s.inversion_tol);
  r.read("histogram_bins", s.histogram_bins);
  r.finish();
  check(s.checks >= 1, r.at("checks"), "must be at least 1");
  check(s.max_time > 0.0, r.at("max_time"), "must be positive");
  check(s.constant_rate > 0.0, r.at("constant_rate"), "must be positive");
  check(s.inversion_tol > 0.0, r.at("inversion_tol"), "must be positive");
  check(s.histogram_bins >= 1, r.at("histogram_bins"), "must be at least 1");
}

void read_dichotomy(const json& node, const std::string& path, DichotomySection& s) {
  Reader r(node, path);
  if (r.has("p")) s.p = read_point(r.raw("p"), r.at("p"));
  r.read("chart_radius", s.chart_radius);
  r.read_vector("flat_depths", s.flat_depths);
  r.read("gamma_samples", s.gamma_samples);
  // null means "reuse base_map", as written back by effective_json
  if (r.has("gamma_base_map") && !r.raw("gamma_base_map").is_null()) {
    s.gamma_base_map = read_base_map(r.raw("gamma_base_map"), r.at("gamma_base_map"));
  }
  r.read("witness_points", s.witness_points);
  r.read("witness_horizon", s.witness_horizon);
  r.read("witness_rows", s.witness_rows);
  r.read("witness_tol", s.witness_tol);
  r.finish();
  check(s.chart_radius > 0.0 && s.chart_radius < 0.25, r.at("chart_radius"), "must lie in (0, 1/4)");
  check(!s.flat_depths.empty(), r.at("flat_depths"), "must not be empty");
  for (std::size_t i = 0; i < s.flat_depths.size(); ++i) {
    check(s.flat_depths[i] >= 0, r.at("flat_depths") + "/" + std::to_string(i), "must be nonnegative");
  }
  check(s.gamma_samples >= 1, r.at("gamma_samples"), "must be at least 1");
  check(s.witness_points >= 0, r.at("witness_points"), "must be nonnegative");
  check(s.witness_horizon > 0.0, r.at("witness_horizon"), "must be positive");
  check(s.witness_rows >= 2, r.at("witness_rows"), "must be at least 2");
  check(s.witness_tol > 0.0, r.at("witness_tol"), "must be positive");
}

void check_point_dim(const StoppedPointSpec& p, int dim, const std::string& path) {
  check(p.base.empty() || static_cast<int>(p.base.size()) == dim, path + "/base",
        "must have one coordinate per base dimension (" + std::to_string(dim) + ")");
}

json point_json(const StoppedPointSpec& p) { return {{"base", p.base}, {"height", p.height}}; }

json field_json(const FieldSpec& f) {
  return {{"kind", f.kind},
          {"value", f.value},
          {"floor_depth", f.floor_depth},
          {"chart_radius", f.chart_radius},
          {"p", point_json(f.p)}};
}

json base_map_json(const BaseMapSpec& b) {
  json j = {{"kind", b.kind}, {"dim", b.dim}};
  if (!b.matrix.empty()) j["matrix"] = b.matrix;
  if (!b.angles.empty()) j["angles"] = b.angles;
  return j;
}

}  // namespace

BaseMap BaseMapSpec::build() const {
  if (kind == "cat") return BaseMap::cat_map();
  if (kind == "golden_rotation") return BaseMap::golden_rotation();
  if (kind == "identity") return BaseMap::identity(dim);
  if (kind == "rotation") return BaseMap::rotation(Eigen::Map<const Eigen::VectorXd>(angles.data(), angles.size()));
  const auto n = static_cast<Eigen::Index>(matrix.size());
  IntMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(matrix[i].size()) != n) {
      throw Error(ErrorCode::InvalidArgument, "matrix must be square");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = matrix[i][j];
  }
  return BaseMap::toral_automorphism(m);
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  c.grid.n_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  c.grid.eps_values = {0.2, 0.1, 0.05};
  Reader r(doc, "");
  r.read("seed", c.seed);
  r.read("output_dir", c.output_dir);
  if (r.has("base_map")) c.base_map = read_base_map(r.raw("base_map"), "/base_map");
  if (r.has("sampling")) read_sampling(r.raw("sampling"), "/sampling", c.sampling);
  if (r.has("grid")) read_grid(r.raw("grid"), "/grid", c.grid);
  if (r.has("profile")) read_profile(r.raw("profile"), "/profile", c.profile);
  if (r.has("flatfn")) read_flatfn(r.raw("flatfn"), "/flatfn", c.flatfn);
  if (r.has("entropy")) read_entropy(r.raw("entropy"), "/entropy", c.entropy);
  if (r.has("recurrence")) read_recurrence(r.raw("recurrence"), "/recurrence", c.recurrence);
  if (r.has("timechange")) read_timechange(r.raw("timechange"), "/timechange", c.timechange);
  if (r.has("dichotomy")) read_dichotomy(r.raw("dichotomy"), "/dichotomy", c.dichotomy);
  r.finish();
  check(!c.output_dir.empty(), "/output_dir", "must not be empty");

  const int dim = c.base_map.build().dim();
  check_point_dim(c.timechange.field.p, dim, "/timechange/field/p");
  check_point_dim(c.dichotomy.p, dim, "/dichotomy/p");
  if (c.entropy.time_change) check_point_dim(c.entropy.time_change->p, dim, "/entropy/time_change/p");
  c.source = doc;
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::Config, "line " + std::to_string(line) + ", column " + std::to_string(column) +
                                       ": JSON syntax error: " + e.what());
  }
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

json effective_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["base_map"] = base_map_json(c.base_map);
  j["sampling"] = {{"count", c.sampling.count},
                   {"burn_in", c.sampling.burn_in},
                   {"chains", c.sampling.chains},
                   {"stride", c.sampling.stride}};
  j["grid"] = {{"delta", c.grid.delta},
               {"n_values", c.grid.n_values},
               {"eps_values", c.grid.eps_values},
               {"time_step", c.grid.time_step},
               {"saturation_fraction", c.grid.saturation_fraction},
               {"method", to_string(c.grid.method)}};
  j["profile"] = {{"i0", c.profile.i0},
                  {"count", c.profile.count},
                  {"l_scale", c.profile.l_scale},
                  {"truncation_tol", c.profile.truncation_tol},
                  {"recurrence", c.profile.recurrence},
                  {"recurrence_starts", c.profile.recurrence_starts},
                  {"betas", c.profile.betas}};
  j["flatfn"] = {{"grid_points", c.flatfn.grid_points},
                 {"t_min", c.flatfn.t_min},
                 {"t_max", c.flatfn.t_max},
                 {"shells", c.flatfn.shells},
                 {"per_shell", c.flatfn.per_shell},
                 {"derivative_exponents", c.flatfn.derivative_exponents}};
  j["entropy"] = {{"map", c.entropy.map},
                  {"suspension", c.entropy.suspension},
                  {"time_change", c.entropy.time_change ? field_json(*c.entropy.time_change) : json(nullptr)},
                  {"totoki", c.entropy.totoki},
                  {"alt_delta", c.entropy.alt_delta ? json(*c.entropy.alt_delta) : json(nullptr)}};
  j["recurrence"] = {{"eps_values", c.recurrence.eps_values},
                     {"grid_resolution", c.recurrence.grid_resolution},
                     {"horizon", c.recurrence.horizon},
                     {"centers", c.recurrence.centers},
                     {"orbit_length", c.recurrence.orbit_length}};
  j["timechange"] = {{"field", field_json(c.timechange.field)},
                     {"checks", c.timechange.checks},
                     {"max_time", c.timechange.max_time},
                     {"constant_rate", c.timechange.constant_rate},
                     {"inversion_tol", c.timechange.inversion_tol},
                     {"histogram_bins", c.timechange.histogram_bins}};
  const auto& d = c.dichotomy;
  j["dichotomy"] = {{"p", point_json(d.p)},
                    {"chart_radius", d.chart_radius},
                    {"flat_depths", d.flat_depths},
                    {"gamma_samples", d.gamma_samples},
                    {"gamma_base_map", d.gamma_base_map ? base_map_json(*d.gamma_base_map) : json(nullptr)},
                    {"witness_points", d.witness_points},
                    {"witness_horizon", d.witness_horizon},
                    {"witness_rows", d.witness_rows},
                    {"witness_tol", d.witness_tol}};
  return j;
}

}  // namespace flowlab::lab
