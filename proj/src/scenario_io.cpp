#include "svmcast/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace svmcast {

using nlohmann::json;

std::vector<double> default_outage_targets() { return {1e-4, 4e-4, 5e-4}; }

namespace {

constexpr double kQcifPixels = 176.0 * 144.0;
constexpr double kCifPixels = 352.0 * 288.0;
constexpr double k4CifPixels = 704.0 * 576.0;

BitstreamPreset make_preset(const std::string& name, std::vector<std::int64_t> symbols,
                            std::vector<double> psnr) {
  BitstreamPreset p;
  p.name = name;
  const auto targets = default_outage_targets();
  for (std::size_t l = 0; l < symbols.size(); ++l) {
    p.layers.push_back({symbols[l], targets[l]});
  }
  p.playback = {
      {kQcifPixels, 15.0, psnr[0]},
      {kCifPixels, 30.0, psnr[1]},
      {k4CifPixels, 60.0, psnr[2]},
  };
  p.nmos.s_max = k4CifPixels;
  p.nmos.f_max = 60.0;
  return p;
}

const std::vector<BitstreamPreset>& presets() {
  static const std::vector<BitstreamPreset> all = {
      make_preset("city", {261, 1111, 6694}, {33.4, 33.5, 33.5}),
      make_preset("ice", {212, 736, 5579}, {32.2, 34.9, 38.6}),
      make_preset("crew", {377, 1519, 7005}, {37.3, 37.1, 37.7}),
  };
  return all;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::runtime_error("scenario: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

double get_num(const json& obj, const std::string& path, const std::string& key, double dflt,
               bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(path + "." + key, "missing");
    return dflt;
  }
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

std::vector<double> get_num_array(const json& obj, const std::string& key,
                                  const std::string& path) {
  if (!obj[key].is_array()) fail(path + "." + key, "expected an array");
  if (obj[key].empty()) fail(path + "." + key, "list must not be empty");
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) fail(path + "." + key, "expected numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

RcDistribution parse_distribution(const json& d, const std::string& path) {
  check_keys(d, path, {"preset", "uniform", "mixture", "samples", "parametric"});
  if (d.contains("preset")) {
    return preset_distribution(d["preset"].get<std::string>());
  }
  if (d.contains("uniform")) {
    const auto& u = d["uniform"];
    check_keys(u, path + ".uniform", {"lo", "hi"});
    return RcDistribution(
        UniformDist{get_num(u, path, "lo", 0.0), get_num(u, path, "hi", 1.0)});
  }
  if (d.contains("mixture")) {
    TruncatedGaussianMixture mix;
    for (const auto& c : d["mixture"]) {
      check_keys(c, path + ".mixture[]", {"weight", "mean", "stddev"});
      mix.components.push_back({get_num(c, path, "weight", 1.0), get_num(c, path, "mean", 0.5, true),
                                get_num(c, path, "stddev", 0.1, true)});
    }
    return RcDistribution(std::move(mix));
  }
  if (d.contains("samples")) {
    return RcDistribution(EmpiricalDist{get_num_array(d, "samples", path)});
  }
  if (d.contains("parametric")) {
    const auto& pd = d["parametric"];
    check_keys(pd, path + ".parametric", {"c", "p"});
    return RcDistribution(ParametricDist{get_num(pd, path, "c", 1.0, true),
                                         get_num(pd, path, "p", 1.0, true)});
  }
  fail(path, "distribution needs one of preset|uniform|mixture|samples|parametric");
}

}  // namespace

const BitstreamPreset& bitstream_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw std::runtime_error("unknown bitstream preset '" + name + "'");
}

std::vector<std::string> bitstream_preset_names() { return {"city", "ice", "crew"}; }

ParsedScenario parse_scenario_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
  }
  check_keys(doc, "$",
             {"name", "code_params", "layers", "classes", "service", "solver", "study", "seed"});

  ParsedScenario parsed;
  Scenario& sc = parsed.scenario;
  sc.name = doc.contains("name") ? doc["name"].get<std::string>() : "scenario";
  if (doc.contains("seed")) sc.seed = doc["seed"].get<std::uint64_t>();

  if (doc.contains("code_params")) {
    const auto& cp = doc["code_params"];
    check_keys(cp, "$.code_params", {"a", "b", "h"});
    sc.code.a = get_num(cp, "$.code_params", "a", sc.code.a);
    sc.code.b = get_num(cp, "$.code_params", "b", sc.code.b);
    sc.code.H = get_num(cp, "$.code_params", "h", sc.code.H);
    if (!sc.code.valid()) fail("$.code_params", "constraints 0<a<=1, 0<b<1, h>1 violated");
  }

  // layers
  if (!doc.contains("layers")) fail("$.layers", "missing");
  const BitstreamPreset* preset = nullptr;
  {
    const auto& layers = doc["layers"];
    check_keys(layers, "$.layers", {"preset", "inline", "p_out"});
    if (layers.contains("preset")) {
      preset = &bitstream_preset(layers["preset"].get<std::string>());
      sc.layers = preset->layers;
    } else if (layers.contains("inline")) {
      for (const auto& l : layers["inline"]) {
        check_keys(l, "$.layers.inline[]", {"source_symbols", "p_out"});
        sc.layers.push_back({static_cast<std::int64_t>(get_num(l, "$.layers.inline[]",
                                                               "source_symbols", 0, true)),
                             get_num(l, "$.layers.inline[]", "p_out", 0.0, true)});
      }
    } else {
      fail("$.layers", "needs preset or inline");
    }
    if (layers.contains("p_out")) {
      const auto targets = get_num_array(layers, "p_out", "$.layers");
      if (targets.size() != sc.layers.size()) fail("$.layers.p_out", "length mismatch");
      for (std::size_t l = 0; l < targets.size(); ++l) sc.layers[l].p_out = targets[l];
    }
    for (const auto& l : sc.layers) {
      if (l.source_symbols < 1 || l.p_out <= 0.0 || l.p_out > 0.5)
        fail("$.layers", "layers need source_symbols >= 1 and p_out in (0, 0.5]");
    }
  }

  // classes
  if (!doc.contains("classes") || !doc["classes"].is_array() || doc["classes"].empty())
    fail("$.classes", "at least one class required");
  double prior_sum = 0.0;
  for (std::size_t m = 0; m < doc["classes"].size(); ++m) {
    const auto& c = doc["classes"][m];
    const std::string path = "$.classes[" + std::to_string(m) + "]";
    check_keys(c, path,
               {"prior", "highest_layer", "distribution", "alphas", "prefs", "prefs_geometric",
                "betas", "nmos"});
    ClientClass cls;
    cls.prior = get_num(c, path, "prior", 1.0);
    cls.highest_layer = static_cast<int>(get_num(c, path, "highest_layer",
                                                 static_cast<double>(sc.layers.size())));
    if (cls.highest_layer < 1 || cls.highest_layer > static_cast<int>(sc.layers.size()))
      fail(path + ".highest_layer", "must be in 1..L");
    if (!c.contains("distribution")) fail(path + ".distribution", "missing");
    cls.dist = parse_distribution(c["distribution"], path + ".distribution");

    // preference weights
    if (c.contains("prefs")) {
      cls.prefs = get_num_array(c, "prefs", path);
    } else if (c.contains("prefs_geometric")) {
      const double w = c["prefs_geometric"].get<double>();
      for (int l = 1; l <= cls.highest_layer; ++l) {
        cls.prefs.push_back(std::pow(w, cls.highest_layer - l));
      }
    } else {
      cls.prefs.assign(cls.highest_layer, 1.0);
    }

    if (c.contains("alphas")) {
      cls.alphas = get_num_array(c, "alphas", path);
      if (static_cast<int>(cls.alphas.size()) < cls.highest_layer)
        fail(path + ".alphas", "needs one entry per decodable layer");
    } else {
      // derive alphas from the perceptual score of the preset playback
      NmosParams np = preset ? preset->nmos : NmosParams{};
      std::vector<LayerPlayback> playback = preset ? preset->playback : std::vector<LayerPlayback>{};
      if (c.contains("nmos")) {
        const auto& n = c["nmos"];
        check_keys(n, path + ".nmos", {"b_s", "b_f", "b_p", "s_max", "f_max", "playback"});
        np.b_s = get_num(n, path + ".nmos", "b_s", np.b_s);
        np.b_f = get_num(n, path + ".nmos", "b_f", np.b_f);
        np.b_p = get_num(n, path + ".nmos", "b_p", np.b_p);
        np.s_max = get_num(n, path + ".nmos", "s_max", np.s_max);
        np.f_max = get_num(n, path + ".nmos", "f_max", np.f_max);
        if (n.contains("playback")) {
          playback.clear();
          for (const auto& pb : n["playback"]) {
            check_keys(pb, path + ".nmos.playback[]", {"pixels", "frame_rate", "psnr_db"});
            playback.push_back({get_num(pb, path, "pixels", 0.0, true),
                                get_num(pb, path, "frame_rate", 0.0, true),
                                get_num(pb, path, "psnr_db", 0.0, true)});
          }
        }
      }
      if (playback.size() < static_cast<std::size_t>(cls.highest_layer))
        fail(path, "alphas or nmos playback required for every decodable layer");
      std::vector<double> utilities;
      for (int l = 1; l <= cls.highest_layer; ++l) {
        LayerPlayback pb = playback[l - 1];
        pb.pixels = std::min(pb.pixels, np.s_max);           // cap at the class display
        pb.frame_rate = std::min(pb.frame_rate, np.f_max);
        const double score = nmos(pb, np);
        utilities.push_back(cls.prefs[l - 1] * score);
      }
      cls.alphas = marginal_utilities(utilities);
    }

    if (c.contains("betas")) cls.betas = get_num_array(c, "betas", path);
    prior_sum += cls.prior;
    sc.classes.push_back(std::move(cls));
  }
  if (std::fabs(prior_sum - 1.0) > 1e-9) fail("$.classes", "priors must sum to 1");

  // service
  if (!doc.contains("service")) fail("$.service", "missing");
  {
    const auto& s = doc["service"];
    check_keys(s, "$.service", {"n_max", "omega_bps", "t_seg_s", "symbol_bits"});
    if (s.contains("n_max")) {
      sc.n_max = static_cast<std::int64_t>(get_num(s, "$.service", "n_max", 0, true));
    } else {
      sc.n_max = service_bandwidth(get_num(s, "$.service", "omega_bps", 0, true),
                                   get_num(s, "$.service", "t_seg_s", 0, true),
                                   get_num(s, "$.service", "symbol_bits", 0, true));
    }
    if (sc.n_max < 1) fail("$.service", "n_max must be positive");
  }

  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    check_keys(s, "$.solver", {"grid_d", "lambda"});
    sc.grid_d = static_cast<int>(get_num(s, "$.solver", "grid_d", sc.grid_d));
    sc.lambda = get_num(s, "$.solver", "lambda", sc.lambda);
  }

  if (doc.contains("study")) {
    const auto& s = doc["study"];
    check_keys(s, "$.study",
               {"type", "csfr_sweep", "gamma_sweep", "lambda_sweep", "n_max_sweep", "sigma_sweep",
                "segment_scales", "repetitions", "clients_per_class", "num_segments",
                "ffr_client_mean", "frames_per_segment", "ffr_trials"});
    if (!s.contains("type")) fail("$.study.type", "missing");
    parsed.study = s["type"].get<std::string>();
    if (s.contains("csfr_sweep")) sc.csfr_sweep = get_num_array(s, "csfr_sweep", "$.study");
    if (s.contains("gamma_sweep")) sc.gamma_sweep = get_num_array(s, "gamma_sweep", "$.study");
    if (s.contains("lambda_sweep")) sc.lambda_sweep = get_num_array(s, "lambda_sweep", "$.study");
    if (s.contains("sigma_sweep")) sc.sigma_sweep = get_num_array(s, "sigma_sweep", "$.study");
    if (s.contains("segment_scales"))
      sc.segment_scales = get_num_array(s, "segment_scales", "$.study");
    if (s.contains("n_max_sweep")) {
      for (double v : get_num_array(s, "n_max_sweep", "$.study")) {
        sc.n_max_sweep.push_back(static_cast<std::int64_t>(v));
      }
    }
    sc.repetitions = static_cast<int>(get_num(s, "$.study", "repetitions", sc.repetitions));
    sc.clients_per_class =
        static_cast<int>(get_num(s, "$.study", "clients_per_class", sc.clients_per_class));
    sc.num_segments = static_cast<int>(get_num(s, "$.study", "num_segments", sc.num_segments));
    sc.ffr_client_mean = get_num(s, "$.study", "ffr_client_mean", sc.ffr_client_mean);
    sc.frames_per_segment =
        static_cast<int>(get_num(s, "$.study", "frames_per_segment", sc.frames_per_segment));
    sc.ffr_trials = static_cast<int>(get_num(s, "$.study", "ffr_trials", sc.ffr_trials));
  }

  // Canonical dump (nlohmann objects are key-sorted), FNV-1a.
  const std::string canon = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  parsed.config_hash = h;
  return parsed;
}

ParsedScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);  // fixed newline convention
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> row;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace svmcast
