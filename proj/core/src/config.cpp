#include "ahtm/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "ahtm/error.hpp"

namespace ahtm {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += sep;
    out += i;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& v) {
  std::size_t used = 0;
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    out = static_cast<T>(std::stod(v, &used));
  } else {
    if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
    out = static_cast<T>(std::stoull(v, &used));
    if (static_cast<unsigned long long>(out) != std::stoull(v)) throw std::out_of_range("too large");
  }
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return out;
}

bool parse_bool(const std::string& v) {
  std::string l = v;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "true" || l == "1" || l == "on" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "off" || l == "no") return false;
  throw std::invalid_argument("not a boolean");
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

template <typename T>
Setter num(T PipelineConfig::*outer) {
  return [outer](PipelineConfig& c, const std::string& v) { c.*outer = parse_number<T>(v); };
}

template <typename Sub, typename T>
Setter num(Sub PipelineConfig::*outer, T Sub::*inner) {
  return [outer, inner](PipelineConfig& c, const std::string& v) { (c.*outer).*inner = parse_number<T>(v); };
}

template <typename Sub>
Setter flag(Sub PipelineConfig::*outer, bool Sub::*inner) {
  return [outer, inner](PipelineConfig& c, const std::string& v) { (c.*outer).*inner = parse_bool(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mode", [](PipelineConfig& c, const std::string& v) { c.mode = parse_mode(v); }},
      {"learning", [](PipelineConfig& c, const std::string& v) { c.learning = parse_bool(v); }},
      {"repeat", num(&PipelineConfig::repeat_count)},

      {"encoder.width", num(&PipelineConfig::encoder, &ScalarEncoderConfig::width)},
      {"encoder.active_width", num(&PipelineConfig::encoder, &ScalarEncoderConfig::active_width)},
      {"encoder.min",
       [](PipelineConfig& c, const std::string& v) {
         c.encoder.min_value = parse_number<double>(v);
         c.encoder_auto_range = false;
       }},
      {"encoder.max",
       [](PipelineConfig& c, const std::string& v) {
         c.encoder.max_value = parse_number<double>(v);
         c.encoder_auto_range = false;
       }},
      {"encoder.clip", flag(&PipelineConfig::encoder, &ScalarEncoderConfig::clip_out_of_range)},

      {"sp.columns", num(&PipelineConfig::sp, &SpConfig::columns)},
      {"sp.k", num(&PipelineConfig::sp, &SpConfig::k)},
      {"sp.alpha", num(&PipelineConfig::sp, &SpConfig::alpha)},
      {"sp.connect_threshold", num(&PipelineConfig::sp, &SpConfig::connect_threshold)},
      {"sp.pool_fraction", num(&PipelineConfig::sp, &SpConfig::pool_fraction)},
      {"sp.seed", num(&PipelineConfig::sp, &SpConfig::seed)},
      {"sp.overlap_mode",
       [](PipelineConfig& c, const std::string& v) {
         if (v == "connected_count") c.sp.overlap_mode = OverlapMode::ConnectedCount;
         else if (v == "weighted_sum") c.sp.overlap_mode = OverlapMode::WeightedSum;
         else throw std::invalid_argument("expected connected_count or weighted_sum");
       }},

      {"sm.cells_per_column", num(&PipelineConfig::sm, &SmConfig::cells_per_column)},
      {"sm.theta", num(&PipelineConfig::sm, &SmConfig::theta)},
      {"sm.connect_threshold", num(&PipelineConfig::sm, &SmConfig::connect_threshold)},
      {"sm.activation_threshold", num(&PipelineConfig::sm, &SmConfig::activation_threshold)},
      {"sm.matching_threshold", num(&PipelineConfig::sm, &SmConfig::matching_threshold)},
      {"sm.perm_inc", num(&PipelineConfig::sm, &SmConfig::perm_inc)},
      {"sm.perm_dec", num(&PipelineConfig::sm, &SmConfig::perm_dec)},
      {"sm.initial_perm", num(&PipelineConfig::sm, &SmConfig::initial_perm)},
      {"sm.max_segments", num(&PipelineConfig::sm, &SmConfig::max_segments)},
      {"sm.max_synapses", num(&PipelineConfig::sm, &SmConfig::max_synapses)},
      {"sm.new_synapse_count", num(&PipelineConfig::sm, &SmConfig::new_synapse_count)},
      {"sm.seed", num(&PipelineConfig::sm, &SmConfig::seed)},

      {"rm.capacity", num(&PipelineConfig::rm, &ReflexConfig::capacity)},
      {"rm.count_ceiling", num(&PipelineConfig::rm, &ReflexConfig::count_ceiling)},
      {"rm.layout",
       [](PipelineConfig& c, const std::string& v) {
         if (v == "keyed") c.rm.layout = ReflexLayout::Keyed;
         else if (v == "row_per_pair") c.rm.layout = ReflexLayout::RowPerPair;
         else throw std::invalid_argument("expected keyed or row_per_pair");
       }},

      {"cu.window", num(&PipelineConfig::cu, &CuConfig::window)},
      {"cu.boost_factor", num(&PipelineConfig::cu, &CuConfig::boost_factor)},
      {"cu.skip_sm_when_rm_confident", flag(&PipelineConfig::cu, &CuConfig::skip_sm_when_rm_confident)},
      {"cu.pin",
       [](PipelineConfig& c, const std::string& v) {
         if (v == "none") c.cu.pin.reset();
         else if (v == "rm" || v == "RM") c.cu.pin = Memory::RM;
         else if (v == "sm" || v == "SM") c.cu.pin = Memory::SM;
         else throw std::invalid_argument("expected none, rm or sm");
       }},

      {"cam.n", num(&PipelineConfig::cam, &CamGeometry::n)},
      {"cam.m", num(&PipelineConfig::cam, &CamGeometry::m)},
      {"cam.p", num(&PipelineConfig::cam, &CamGeometry::p)},
      {"cam.q", num(&PipelineConfig::cam, &CamGeometry::q)},
  };
  return table;
}

}  // namespace

Settings parse_settings(std::string_view text, const std::string& origin) {
  Settings out;
  std::vector<std::string> problems;
  std::map<std::string, std::vector<std::string>> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back(origin + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      problems.push_back(origin + ":" + std::to_string(line_no) + ": empty key");
      continue;
    }
    seen[key].push_back(value);
    out[key] = value;
  }
  std::vector<std::string> conflicts;
  for (const auto& [key, values] : seen) {
    if (std::any_of(values.begin(), values.end(), [&values](const std::string& v) { return v != values.front(); })) {
      conflicts.push_back(key);
    }
  }
  if (!conflicts.empty()) problems.push_back("conflicting values for keys: " + join(conflicts));
  if (!problems.empty()) throw ValidationError("config validation failed: " + join(problems, "; "));
  return out;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path);
}

void apply_settings(PipelineConfig& cfg, const Settings& settings) {
  std::vector<std::string> unknown;
  std::vector<std::string> bad;
  PipelineConfig next = cfg;
  for (const auto& [key, value] : settings) {
    const auto it = setters().find(key);
    if (it == setters().end()) {
      unknown.push_back(key);
      continue;
    }
    try {
      it->second(next, value);
    } catch (const std::exception& e) {
      bad.push_back(key + "=" + value + " (" + e.what() + ")");
    }
  }
  std::vector<std::string> problems;
  if (!unknown.empty()) problems.push_back("unknown keys: " + join(unknown));
  if (!bad.empty()) problems.push_back("invalid values: " + join(bad));
  if (settings.count("encoder.min") != settings.count("encoder.max")) {
    problems.push_back("encoder.min and encoder.max must be given together [keys: encoder.min, encoder.max]");
  }
  if (!problems.empty()) throw ValidationError("config validation failed: " + join(problems, "; "));
  try {
    next.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config validation failed: ") + e.what());
  }
  cfg = next;
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, s] : setters()) keys.push_back(k);
  return keys;
}

Settings to_settings(const PipelineConfig& c) {
  auto num = [](auto v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  Settings s{
      {"mode", std::string(c.mode == Mode::HTM ? "htm" : c.mode == Mode::AHTM ? "ahtm" : "h_ahtm")},
      {"learning", b(c.learning)},
      {"repeat", num(c.repeat_count)},
      {"encoder.width", num(c.encoder.width)},
      {"encoder.active_width", num(c.encoder.active_width)},
      {"encoder.clip", b(c.encoder.clip_out_of_range)},
      {"sp.columns", num(c.sp.columns)},
      {"sp.k", num(c.sp.k)},
      {"sp.alpha", num(c.sp.alpha)},
      {"sp.connect_threshold", num(c.sp.connect_threshold)},
      {"sp.pool_fraction", num(c.sp.pool_fraction)},
      {"sp.seed", num(c.sp.seed)},
      {"sp.overlap_mode", c.sp.overlap_mode == OverlapMode::ConnectedCount ? "connected_count" : "weighted_sum"},
      {"sm.cells_per_column", num(c.sm.cells_per_column)},
      {"sm.theta", num(c.sm.theta)},
      {"sm.connect_threshold", num(c.sm.connect_threshold)},
      {"sm.activation_threshold", num(c.sm.activation_threshold)},
      {"sm.matching_threshold", num(c.sm.matching_threshold)},
      {"sm.perm_inc", num(c.sm.perm_inc)},
      {"sm.perm_dec", num(c.sm.perm_dec)},
      {"sm.initial_perm", num(c.sm.initial_perm)},
      {"sm.max_segments", num(c.sm.max_segments)},
      {"sm.max_synapses", num(c.sm.max_synapses)},
      {"sm.new_synapse_count", num(c.sm.new_synapse_count)},
      {"sm.seed", num(c.sm.seed)},
      {"rm.capacity", num(c.rm.capacity)},
      {"rm.count_ceiling", num(c.rm.count_ceiling)},
      {"rm.layout", c.rm.layout == ReflexLayout::Keyed ? "keyed" : "row_per_pair"},
      {"cu.window", num(c.cu.window)},
      {"cu.boost_factor", num(c.cu.boost_factor)},
      {"cu.skip_sm_when_rm_confident", b(c.cu.skip_sm_when_rm_confident)},
      {"cu.pin", !c.cu.pin ? "none" : *c.cu.pin == Memory::RM ? "rm" : "sm"},
      {"cam.n", num(c.cam.n)},
      {"cam.m", num(c.cam.m)},
      {"cam.p", num(c.cam.p)},
      {"cam.q", num(c.cam.q)},
  };
  if (!c.encoder_auto_range) {
    s["encoder.min"] = num(c.encoder.min_value);
    s["encoder.max"] = num(c.encoder.max_value);
  }
  return s;
}

}  // namespace ahtm
