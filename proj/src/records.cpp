#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "corap/bench.hpp"

namespace corap {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line, std::size_t expected) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  // The last field (status) keeps everything after the final separator.
  while (fields.size() + 1 < expected) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) break;
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  fields.push_back(line.substr(pos));
  return fields;
}

double to_double(std::string_view field) {
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("CSV: bad number '" + s + "'");
  return v;
}

long long to_integer(std::string_view field) {
  const std::string s(field);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("CSV: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string_view csv_header() {
  return "trial,algorithm,I,J,K,R,Rprime,M,snr_db,mre,wall_time_s,m_opt,status";
}

std::string format_record(const RunRecord& r) {
  std::string out;
  out += std::to_string(r.trial) + ',';
  out += std::string(to_string(r.algorithm)) + ',';
  for (Index d : r.dims) out += std::to_string(d) + ',';
  out += std::to_string(r.rank) + ',';
  out += std::to_string(r.oversample) + ',';
  out += std::to_string(r.max_power) + ',';
  out += format_double(r.snr_db) + ',';
  out += format_double(r.mre) + ',';
  out += format_double(r.wall_time) + ',';
  if (r.m_opt) out += std::to_string(*r.m_opt);
  out += ',';
  out += sanitize(r.status);
  return out;
}

RunRecord parse_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split_fields(line, 13);
  if (f.size() != 13) throw std::runtime_error("CSV: expected 13 fields");
  RunRecord r;
  r.trial = static_cast<int>(to_integer(f[0]));
  r.algorithm = parse_algorithm(f[1]);
  r.dims = {to_integer(f[2]), to_integer(f[3]), to_integer(f[4])};
  r.rank = to_integer(f[5]);
  r.oversample = to_integer(f[6]);
  r.max_power = static_cast<int>(to_integer(f[7]));
  r.snr_db = to_double(f[8]);
  r.mre = to_double(f[9]);
  r.wall_time = to_double(f[10]);
  if (!f[11].empty()) r.m_opt = static_cast<int>(to_integer(f[11]));
  r.status = std::string(f[12]);
  return r;
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << csv_header() << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
}

std::vector<RunRecord> read_records_csv(std::istream& in) {
  std::vector<RunRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("trial,", 0) == 0) continue;
    }
    records.push_back(parse_record(line));
  }
  return records;
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records_csv(in);
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "algorithm,M,snr_db,R,count,failures,mean_mre,stderr_mre,mean_time_s,stderr_time_s\n";
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.max_power << ',' << format_double(r.snr_db) << ','
        << r.rank << ',' << r.count << ',' << r.failures << ',' << format_double(r.mean_mre) << ','
        << format_double(r.stderr_mre) << ',' << format_double(r.mean_time) << ','
        << format_double(r.stderr_time) << '\n';
  }
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "algo" << std::right << std::setw(4) << "M" << std::setw(9)
      << "snr_db" << std::setw(6) << "R" << std::setw(7) << "n" << std::setw(6) << "fail"
      << std::setw(14) << "mean_mre" << std::setw(12) << "stderr" << std::setw(12) << "time_s"
      << std::setw(12) << "stderr" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << to_string(r.algorithm) << std::right << std::setw(4)
        << r.max_power << std::setw(9) << r.snr_db << std::setw(6) << r.rank << std::setw(7)
        << r.count << std::setw(6) << r.failures << std::scientific << std::setprecision(4)
        << std::setw(14) << r.mean_mre << std::setw(12) << r.stderr_mre << std::setw(12)
        << r.mean_time << std::setw(12) << r.stderr_time << std::defaultfloat << '\n';
  }
  return out.str();
}

}  // namespace corap
