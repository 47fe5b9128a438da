#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "poprec/bits.hpp"
#include "poprec/channel.hpp"

namespace poprec {

// Trace file format: header `#n=<n> q=<q> q'=<q'> seed=<seed>`, then one
// trace per line as ASCII '0'/'1'; an empty line is an empty trace.
struct TraceFileHeader {
  std::uint32_t n = 0;
  ChannelParams channel;
  std::uint64_t seed = 0;
};

void write_traces(std::ostream& out, const TraceFileHeader& header,
                  const std::vector<Trace>& traces);

struct TraceFile {
  TraceFileHeader header;
  std::vector<Trace> traces;
};
TraceFile read_traces(std::istream& in);

void write_trace_file(const std::string& path, const TraceFileHeader& header,
                      const std::vector<Trace>& traces);
TraceFile read_trace_file(const std::string& path);

}  // namespace poprec
