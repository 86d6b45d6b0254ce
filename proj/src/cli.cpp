/* Copyright 2026 The ovsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ovsim/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "ovsim/costmodel.hpp"
#include "ovsim/error.hpp"
#include "ovsim/validate.hpp"
#include "ovsim/workloads.hpp"

namespace ovsim::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string profile = "h100-sxm-8";
  std::vector<std::string> scenarios;
  std::string mode;
  int comm_sms = -1;
  std::string overheads = "none";
  std::uint64_t seed = 0;
  std::string out;
  bool json = false;
  int stride = 1;
  int max_comm_sms = 0;
};

/// Raised for bad configuration; maps to the usage exit status.
struct UsageError : Error {
  using Error::Error;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string num(double v, const char* fmt = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string csv(const Table& t, const std::string& hash, std::uint64_t seed) {
  std::string s = "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    s += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return s;
}

std::string pretty(const Table& t) {
  std::vector<std::size_t> w(t.header.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = t.header[i].size();
    for (const auto& r : t.rows) w[i] = std::max(w[i], r[i].size());
  }
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      s += cells[i] + std::string(w[i] - cells[i].size() + 2, ' ');
    }
    s.back() = '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return s;
}

nlohmann::json as_json(const Table& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json o;
    for (std::size_t i = 0; i < r.size(); ++i) {
      char* end = nullptr;
      const double v = std::strtod(r[i].c_str(), &end);
      if (!r[i].empty() && *end == '\0') {
        o[t.header[i]] = v;
      } else {
        o[t.header[i]] = r[i];
      }
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write '" + tmp.string() + "'");
    f << content;
  }
  fs::rename(tmp, path);
}

std::string file_stem(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

hw::HardwareProfile profile_of(const Options& o) {
  try {
    return hw::resolve_profile(o.profile);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<wl::Scenario> scenarios_of(const Options& o, const hw::HardwareProfile& p) {
  if (o.scenarios.empty()) throw UsageError("no scenario given; pass --scenario <name|group|all|reduced|file.json>");
  std::vector<wl::Scenario> out;
  try {
    for (const auto& key : o.scenarios) {
      if (key == "reduced") {
        for (wl::Kind k : wl::kAllKinds) {
          out.push_back({"reduced", "reduced/" + std::string(wl::to_string(k)), wl::reduced_spec(k, p.num_devices, o.seed)});
        }
      } else if (fs::path(key).extension() == ".json") {
        auto more = wl::load_scenarios(key);
        out.insert(out.end(), more.begin(), more.end());
      } else {
        auto more = wl::select_scenarios(key);
        out.insert(out.end(), more.begin(), more.end());
      }
    }
    for (auto& sc : out) {
      if (!o.mode.empty()) sc.spec.mode = lcsc::schedule_mode_from_string(o.mode);
      if (o.comm_sms >= 0) sc.spec.num_comm_sms = o.comm_sms;
      if (sc.spec.functional) sc.spec.seed = o.seed;
    }
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (out.empty()) throw UsageError("scenario list is empty");
  return out;
}

des::OverheadConfig overheads_of(const Options& o) {
  try {
    return des::OverheadConfig::parse(o.overheads);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

std::string hash_of(const std::string& cmd, const Options& o, const hw::HardwareProfile& p,
                    const std::vector<wl::Scenario>& scs) {
  nlohmann::json j;
  j["command"] = cmd;
  j["profile"] = hw::profile_to_json(p);
  j["overheads"] = o.overheads;
  j["seed"] = o.seed;
  for (const auto& sc : scs) j["scenarios"].push_back({{"name", sc.name}, {"workload", wl::workload_to_json(sc.spec)}});
  return config_hash(j);
}

lcsc::ScheduleMode mode_of(const wl::WorkloadSpec& w) { return w.mode.value_or(wl::default_mode(w.kind)); }

std::vector<std::string> report_cells(const lcsc::CostReport& r) {
  return {num(r.t_total),      num(r.t_comp),     num(r.t_mem),
          num(r.t_comm),       num(r.t_sync),     num(r.t_non_overlap),
          num(r.t_baseline),   num(r.comm_ratio, "%.4f"), num(r.achieved_flops * 1e-12, "%.2f")};
}

const std::vector<std::string> kReportCols = {"t_total_ns", "t_comp_ns",       "t_mem_ns",
                                               "t_comm_ns",  "t_sync_ns",       "t_non_overlap_ns",
                                               "t_baseline_ns", "comm_ratio",   "achieved_tflops"};

/// Prints the table as JSON, CSV, or (when files go to --out) aligned text,
/// and writes <out>/<name>.csv.
void emit(const Table& t, const std::string& name, const Options& o, const std::string& hash, std::ostream& out) {
  const std::string text = csv(t, hash, o.seed);
  if (!o.out.empty()) write_atomic(fs::path(o.out) / (name + ".csv"), text);
  if (o.json) {
    out << as_json(t).dump(2) << "\n";
  } else if (!o.out.empty()) {
    out << pretty(t);
  } else {
    out << text;
  }
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const auto p = profile_of(o);
  const auto scs = scenarios_of(o, p);
  const double threshold = cost::hiding_threshold(p);
  Table t;
  t.header = {"scenario", "kind", "mode", "profile", "hiding_threshold"};
  t.header.insert(t.header.end(), kReportCols.begin(), kReportCols.end());
  for (const auto& sc : scs) {
    const auto r = cost::predict(sc.spec, p);
    std::vector<std::string> row = {sc.name, std::string(wl::to_string(sc.spec.kind)),
                                    std::string(lcsc::to_string(mode_of(sc.spec))), p.name, num(threshold, "%.1f")};
    auto cells = report_cells(r);
    row.insert(row.end(), cells.begin(), cells.end());
    t.rows.push_back(std::move(row));
  }
  emit(t, "analyze", o, hash_of("analyze", o, p, scs), out);
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto p = profile_of(o);
  const auto scs = scenarios_of(o, p);
  const auto ov = overheads_of(o);
  Table t;
  t.header = {"scenario", "kind", "mode", "comm_sms", "overheads"};
  t.header.insert(t.header.end(), kReportCols.begin(), kReportCols.end());
  t.header.insert(t.header.end(), {"link_bytes_per_tile", "oracle"});
  std::string overhead_cell = ov.to_string();
  std::replace(overhead_cell.begin(), overhead_cell.end(), ',', '+');
  nlohmann::json verdicts = nlohmann::json::array();
  bool ok = true;
  if (!o.out.empty()) fs::create_directories(o.out);
  for (const auto& sc : scs) {
    const wl::Instance inst = wl::build(sc.spec, p);
    lcsc::ExecOptions eo;
    eo.seed = o.seed;
    eo.overheads = ov;
    eo.functional = sc.spec.functional;
    eo.record_log = true;
    eo.with_baseline = true;
    const auto res = lcsc::execute_kernel(inst.kernel, p, eo);
    std::string verdict = "n/a";
    if (sc.spec.functional) {
      const std::string diff = inst.check();
      verdict = diff.empty() ? "pass" : "fail";
      if (!diff.empty()) {
        ok = false;
        err << "oracle mismatch in " << sc.name << ": " << diff << "\n";
      }
      verdicts.push_back({{"scenario", sc.name}, {"verdict", verdict}, {"detail", diff}});
    } else {
      verdicts.push_back({{"scenario", sc.name}, {"verdict", verdict}, {"detail", "timing-only run"}});
    }
    if (!o.out.empty()) write_atomic(fs::path(o.out) / (file_stem(sc.name) + ".log"), res.log.str());
    std::vector<std::string> row = {sc.name, std::string(wl::to_string(sc.spec.kind)),
                                    std::string(lcsc::to_string(inst.kernel.mode)),
                                    std::to_string(inst.kernel.num_comm_sms), overhead_cell};
    auto cells = report_cells(res.report);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(num(calib::link_bytes_per_tile(inst.kernel, res.log), "%.1f"));
    row.push_back(verdict);
    t.rows.push_back(std::move(row));
  }
  if (!o.out.empty()) write_atomic(fs::path(o.out) / "verdicts.json", verdicts.dump(2) + "\n");
  emit(t, "simulate", o, hash_of("simulate", o, p, scs), out);
  return ok ? kExitOk : kExitFailed;
}

int cmd_autotune(const Options& o, std::ostream& out) {
  const auto p = profile_of(o);
  const auto scs = scenarios_of(o, p);
  for (const auto& sc : scs) {
    if (mode_of(sc.spec) == lcsc::ScheduleMode::IntraSm) {
      throw UsageError("scenario '" + sc.name + "' runs intra-SM; autotune needs --mode inter-sm or hybrid");
    }
  }
  lcsc::ExecOptions eo;
  eo.seed = o.seed;
  eo.overheads = overheads_of(o);
  eo.functional = false;
  Table t;
  t.header = {"scenario", "num_comm_sms", "t_total_ns", "achieved_tflops", "best"};
  for (const auto& sc : scs) {
    auto builder = [&](int c) {
      wl::WorkloadSpec w = sc.spec;
      w.num_comm_sms = c;
      w.functional = false;
      return wl::build(w, p).kernel;
    };
    const auto r = lcsc::autotune_partition(builder, p, eo, o.stride, o.max_comm_sms);
    for (const auto& row : r.rows) {
      t.rows.push_back({sc.name, std::to_string(row.num_comm_sms), num(row.t_total_ns),
                        num(row.achieved_flops * 1e-12, "%.2f"), row.num_comm_sms == r.best_comm_sms ? "1" : "0"});
    }
  }
  emit(t, "autotune", o, hash_of("autotune", o, p, scs), out);
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto p = profile_of(o);
  const auto anchors = calib::run_anchors(p);
  const auto j = calib::to_json(anchors);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_atomic(fs::path(o.out) / "validate.json", j.dump(2) + "\n");
  }
  if (o.json) {
    out << j.dump(2) << "\n";
  } else {
    out << calib::to_text(anchors);
  }
  return calib::all_pass(anchors) ? kExitOk : kExitFailed;
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"ovsim: overlapped multi-GPU kernel simulator and planner", "ovsim"};
  app.require_subcommand(1, 1);
  auto common = [&](CLI::App* sc, bool scenarios) {
    sc->add_option("--profile", o.profile, "built-in profile name or JSON profile path")->capture_default_str();
    if (scenarios) {
      sc->add_option("--scenario", o.scenarios, "scenario name, group, 'all', 'reduced' or a JSON file")
          ->delimiter(',');
      sc->add_option("--mode", o.mode, "schedule mode override: intra-sm, inter-sm, hybrid");
      sc->add_option("--comm-sms", o.comm_sms, "dedicated communication SMs")->check(CLI::NonNegativeNumber);
      sc->add_option("--overheads", o.overheads, "handshake,staging,indirection | all | none")->capture_default_str();
      sc->add_option("--seed", o.seed, "seed for data and tie-breaking")->capture_default_str();
    }
    sc->add_option("--out", o.out, "output directory");
    sc->add_flag("--json", o.json, "machine-readable output");
  };
  auto* analyze = app.add_subcommand("analyze", "analytic cost report per scenario");
  auto* simulate = app.add_subcommand("simulate", "run scenarios through the event engine");
  auto* autotune = app.add_subcommand("autotune", "sweep the communication SM count");
  auto* validate = app.add_subcommand("validate", "calibration self-test");
  common(analyze, true);
  common(simulate, true);
  common(autotune, true);
  autotune->add_option("--stride", o.stride, "sweep stride")->check(CLI::PositiveNumber)->capture_default_str();
  autotune->add_option("--max-comm-sms", o.max_comm_sms, "upper end of the sweep (0 = all but one SM)");
  common(validate, false);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!o.out.empty()) fs::create_directories(o.out);
    if (*analyze) return cmd_analyze(o, out);
    if (*simulate) return cmd_simulate(o, out, err);
    if (*autotune) return cmd_autotune(o, out);
    return cmd_validate(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

}  // namespace ovsim::cli
