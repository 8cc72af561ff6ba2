#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "loggas/cli.hpp"

namespace loggas::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::optional<json> read_json(const fs::path& p, std::string& why) {
  std::ifstream in(p);
  if (!in) {
    why = "cannot open";
    return std::nullopt;
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    why = e.what();
    return std::nullopt;
  }
}

std::string safe_name(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
  return s;
}

}  // namespace

ReportResult report(const fs::path& dir) {
  ReportResult res;
  if (!fs::is_directory(dir)) {
    res.exit = exit_no_input;
    res.warnings.push_back(dir.string() + " is not a directory");
    return res;
  }
  std::vector<fs::path> found;
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it) {
    if (it.depth() > 2) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && it->path().filename() == "record.json") found.push_back(it->path());
  }
  std::sort(found.begin(), found.end());

  struct Entry {
    std::string where;
    json record;
    json summary;
  };
  std::vector<Entry> entries;
  bool corrupted = false;
  for (const auto& p : found) {
    std::string why;
    auto rec = read_json(p, why);
    if (!rec || !rec->is_object() || !rec->contains("kind") || !rec->contains("kernel_hash")) {
      res.warnings.push_back("skipping " + p.string() + ": " + (rec ? "not an experiment record" : why));
      corrupted = true;
      continue;
    }
    Entry e;
    e.where = fs::relative(p.parent_path(), dir).generic_string();
    e.record = *rec;
    const fs::path sp = p.parent_path() / rec->value("summary", "summary.json");
    auto sum = read_json(sp, why);
    if (sum) e.summary = *sum;
    else res.warnings.push_back("no readable summary next to " + p.string() + ": " + why);
    entries.push_back(std::move(e));
  }
  res.records = entries.size();
  if (entries.empty() && !corrupted) {
    res.exit = exit_no_input;
    res.warnings.push_back("no experiment records under " + dir.string());
    return res;
  }

  std::map<std::string, std::vector<std::string>> by_kernel;
  for (const auto& e : entries) by_kernel[e.record["kernel_hash"].get<std::string>()].push_back(e.where);

  const fs::path plots = dir / "report";
  json sections = json::array();
  bool any_fail = false, any_inconclusive = false;
  for (const auto& e : entries) {
    json refs = json::array();
    for (const auto& w : by_kernel[e.record["kernel_hash"].get<std::string>()])
      if (w != e.where) refs.push_back(w);
    json plot_files = json::array();
    if (e.summary.is_object() && e.summary.contains("series")) {
      for (const auto& s : e.summary["series"]) {
        fs::create_directories(plots);
        const std::string tag = e.where == "." ? "root" : e.where;
        const fs::path f = plots / (safe_name(tag) + "__" + safe_name(s.value("name", "series")) + ".csv");
        std::ofstream out(f);
        out << "x,y,ci\n";
        out.precision(17);
        for (const auto& pt : s["points"]) out << pt[0].get<double>() << ',' << pt[1].get<double>() << ',' << pt[2].get<double>() << '\n';
        plot_files.push_back(fs::relative(f, dir).generic_string());
      }
    }
    const json verdicts = e.record.value("verdicts", json::object());
    for (const auto& [name, v] : verdicts.items()) {
      any_fail = any_fail || v == "fail";
      any_inconclusive = any_inconclusive || v == "inconclusive";
    }
    sections.push_back({{"directory", e.where},
                        {"kind", e.record["kind"]},
                        {"config_hash", e.record.value("config_hash", "")},
                        {"kernel_hash", e.record["kernel_hash"]},
                        {"same_kernel", refs},
                        {"verdicts", verdicts},
                        {"results", e.summary.is_object() ? e.summary.value("results", json::object()) : json::object()},
                        {"plots", plot_files}});
  }
  json out = {{"version", version_string()}, {"records", entries.size()}, {"sections", sections},
              {"warnings", res.warnings}};
  res.summary = dir / "report.json";
  std::ofstream f(res.summary);
  f << out.dump(2) << "\n";
  if (corrupted) res.exit = exit_inconclusive;
  else if (any_fail) res.exit = exit_fail;
  else if (any_inconclusive) res.exit = exit_inconclusive;
  return res;
}

}  // namespace loggas::cli
