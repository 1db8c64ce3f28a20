#pragma once

#include <string>

#include "mtc/task_graph.hpp"

namespace mtc {

// Plain-text workload files, one item per line:
//
//   data <id> size=<bytes> kind=<common-input|unique-input|intermediate|output>
//   task <id> runtime=<seconds> [estimate=<seconds>] [priority=<p>] [group=<g>]
//        [width=<n>] [in=<d1,d2,...>] [out=<d1,d2,...>]
//
// Blank lines and lines starting with # are ignored; declaration order is
// free. Writing is canonical (data before tasks, ids ascending), so saving
// the same graph twice produces identical bytes.
TaskGraph load_workload(const std::string& path);
TaskGraph parse_workload(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_workload(const TaskGraph& graph);
void save_workload(const TaskGraph& graph, const std::string& path);

}  // namespace mtc
