#include "fkan/metrics.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <boost/algorithm/string/split.hpp>

namespace fkan {

namespace {

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* column) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::runtime_error("metrics line " + std::to_string(line) + ": bad " + column + " '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw std::runtime_error("not a number: '" + text + "'");
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

double MetricsRow::accuracy_value() const { return parse_double(accuracy); }
double MetricsRow::loss_value() const { return parse_double(loss); }

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_metrics_header(std::ostream& out) { out << kMetricsVersionLine << '\n' << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.dataset << ',' << r.model << ',' << r.strategy << ',' << r.client_count << ',' << r.seed << ','
      << r.round << ',' << r.accuracy << ',' << r.loss << ',' << r.wall_time_ms << '\n';
}

std::vector<MetricsRow> read_metrics(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw std::runtime_error("metrics file is empty");
  strip_cr(line);
  if (line != kMetricsVersionLine)
    throw std::runtime_error("metrics line 1: expected '" + std::string(kMetricsVersionLine) + "'");
  ++line_no;
  if (!std::getline(in, line)) throw std::runtime_error("metrics file has no header");
  strip_cr(line);
  if (line != kMetricsHeader) throw std::runtime_error("metrics line 2: unexpected header");

  std::vector<MetricsRow> rows;
  std::vector<std::string> f;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    boost::algorithm::split(f, line, [](char c) { return c == ','; });
    if (f.size() != 9) {
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": expected 9 fields, got " +
                               std::to_string(f.size()));
    }
    MetricsRow r;
    r.dataset = f[0];
    r.model = f[1];
    r.strategy = f[2];
    r.client_count = parse_number<std::size_t>(f[3], line_no, "client_count");
    r.seed = parse_number<std::uint64_t>(f[4], line_no, "seed");
    r.round = parse_number<std::size_t>(f[5], line_no, "round");
    r.accuracy = f[6];
    r.loss = f[7];
    r.wall_time_ms = f[8];
    try {
      (void)r.accuracy_value();
      (void)r.loss_value();
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("metrics line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_metrics(in);
}

}  // namespace fkan
