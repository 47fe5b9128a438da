#include "poprec/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace poprec {

namespace {

// Shortest representation that round-trips.
std::string format_rate(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void write_traces(std::ostream& out, const TraceFileHeader& header,
                  const std::vector<Trace>& traces) {
  out << "#n=" << header.n << " q=" << format_rate(header.channel.q)
      << " q'=" << format_rate(header.channel.qp) << " seed=" << header.seed
      << "\n";
  for (const auto& t : traces) out << t.to_string() << "\n";
}

TraceFile read_traces(std::istream& in) {
  TraceFile file;
  std::string line;
  if (!std::getline(in, line) || line.rfind("#n=", 0) != 0)
    throw std::runtime_error("trace file: missing header line");
  double q = 0.0, qp = 0.0;
  unsigned long long n = 0, seed = 0;
  if (std::sscanf(line.c_str(), "#n=%llu q=%lf q'=%lf seed=%llu", &n, &q, &qp,
                  &seed) != 4)
    throw std::runtime_error("trace file: malformed header: " + line);
  file.header.n = static_cast<std::uint32_t>(n);
  file.header.channel = ChannelParams(q, qp);
  file.header.seed = seed;
  while (std::getline(in, line)) {
    file.traces.push_back(Bits::from_string(line));
  }
  return file;
}

void write_trace_file(const std::string& path, const TraceFileHeader& header,
                      const std::vector<Trace>& traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_traces(out, header, traces);
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_traces(in);
}

}  // namespace poprec
