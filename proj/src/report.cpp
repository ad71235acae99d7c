#include "cuprof/report.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cuprof/error.hpp"
#include "cuprof/evaluation.hpp"

namespace cuprof {

namespace {

constexpr const char* kResultsHeader = "user,classifier,window,mode,run,tp,fp,tn,fn,precision,recall,fscore,auc";

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.user << ',' << r.classifier << ',' << r.window << ',' << r.mode << ',' << r.run << ',' << r.tp << ','
        << r.fp << ',' << r.tn << ',' << r.fn << ',' << fixed(r.precision) << ',' << fixed(r.recall) << ','
        << fixed(r.fscore) << ',' << (r.auc ? fixed(*r.auc) : "") << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw Error(ErrorCode::FormatError, "results CSV header mismatch");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) {
      throw Error(ErrorCode::WrongFieldCount, "results CSV line " + std::to_string(line_no));
    }
    try {
      ResultRow r;
      r.user = f[0];
      r.classifier = f[1];
      r.window = std::stoi(f[2]);
      r.mode = f[3];
      r.run = std::stoi(f[4]);
      r.tp = std::stoull(f[5]);
      r.fp = std::stoull(f[6]);
      r.tn = std::stoull(f[7]);
      r.fn = std::stoull(f[8]);
      r.precision = std::stod(f[9]);
      r.recall = std::stod(f[10]);
      r.fscore = std::stod(f[11]);
      if (!f[12].empty()) r.auc = std::stod(f[12]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::NonNumericField, "results CSV line " + std::to_string(line_no));
    }
  }
  return rows;
}

std::vector<TableRow> report_tables(std::span<const ResultRow> results) {
  using Key = std::tuple<std::string, int, std::string>;
  struct Cell {
    std::map<int, std::vector<const ResultRow*>> runs;
    std::vector<std::string> users;
  };
  std::map<Key, Cell> cells;
  for (const auto& r : results) {
    auto& cell = cells[{r.classifier, r.window, r.mode}];
    cell.runs[r.run].push_back(&r);
    if (std::find(cell.users.begin(), cell.users.end(), r.user) == cell.users.end()) cell.users.push_back(r.user);
  }

  std::vector<TableRow> out;
  for (const auto& [key, cell] : cells) {
    std::vector<double> p, rc, f, auc;
    for (const auto& [run, rows] : cell.runs) {
      std::vector<double> rp, rr, rf, ra;
      for (const auto* r : rows) {
        rp.push_back(r->precision);
        rr.push_back(r->recall);
        rf.push_back(r->fscore);
        if (r->auc) ra.push_back(*r->auc);
      }
      p.push_back(mean_of(rp));
      rc.push_back(mean_of(rr));
      f.push_back(mean_of(rf));
      if (ra.size() == rows.size()) auc.push_back(mean_of(ra));
    }
    const auto agg = aggregate(f);
    TableRow t;
    std::tie(t.classifier, t.window, t.mode) = key;
    t.users = static_cast<int>(cell.users.size());
    t.runs = agg.n;
    t.precision = mean_of(p);
    t.recall = mean_of(rc);
    t.fscore = agg.mean;
    t.fscore_sd = agg.sd;
    t.fscore_ci95 = agg.ci95;
    if (auc.size() == f.size()) t.auc = mean_of(auc);
    out.push_back(std::move(t));
  }
  return out;
}

std::string tables_csv(std::span<const TableRow> rows) {
  std::ostringstream out;
  out << "classifier,window,mode,users,runs,precision,recall,fscore,fscore_sd,ci_low,ci_high,ci_omitted,auc\n";
  for (const auto& t : rows) {
    out << t.classifier << ',' << t.window << ',' << t.mode << ',' << t.users << ',' << t.runs << ','
        << fixed(t.precision) << ',' << fixed(t.recall) << ',' << fixed(t.fscore) << ',' << fixed(t.fscore_sd) << ','
        << (t.fscore_ci95 ? fixed(t.fscore_ci95->first) : "") << ','
        << (t.fscore_ci95 ? fixed(t.fscore_ci95->second) : "") << ',' << (t.ci_omitted() ? "true" : "false") << ','
        << (t.auc ? fixed(*t.auc) : "") << '\n';
  }
  return out.str();
}

std::string tables_json(std::span<const TableRow> rows) {
  nlohmann::ordered_json j;
  j["schema"] = "cuprof.tables/1";
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : rows) {
    nlohmann::ordered_json r;
    r["classifier"] = t.classifier;
    r["window"] = t.window;
    r["mode"] = t.mode;
    r["users"] = t.users;
    r["runs"] = t.runs;
    r["precision"] = t.precision;
    r["recall"] = t.recall;
    r["fscore"] = t.fscore;
    r["fscore_sd"] = t.fscore_sd;
    if (t.fscore_ci95) {
      r["ci95"] = {t.fscore_ci95->first, t.fscore_ci95->second};
    } else {
      r["ci95"] = nullptr;
    }
    r["ci_omitted"] = t.ci_omitted();
    r["auc"] = t.auc ? nlohmann::ordered_json(*t.auc) : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(r));
  }
  j["rows"] = std::move(arr);
  return j.dump(2) + "\n";
}

}  // namespace cuprof
