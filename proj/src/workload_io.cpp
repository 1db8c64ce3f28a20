#include "mtc/workload_io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mtc/sim_kernel.hpp"

namespace mtc {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
  raise(Errc::config_parse, origin + ":" + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, const std::string& origin, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail(origin, line, "bad number '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& s, const std::string& origin, std::size_t line) {
  const char* begin = s.c_str();
  char* end = nullptr;
  long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') fail(origin, line, "bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace

TaskGraph parse_workload(const std::string& text, const std::string& origin) {
  std::vector<Line> data_lines, task_lines;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream ls(raw);
    std::vector<std::string> tokens;
    std::string tok;
    while (ls >> tok) {
      if (tok[0] == '#') break;
      tokens.push_back(tok);
    }
    if (tokens.empty()) continue;
    if (tokens[0] == "data")
      data_lines.push_back({lineno, std::move(tokens)});
    else if (tokens[0] == "task")
      task_lines.push_back({lineno, std::move(tokens)});
    else
      fail(origin, lineno, "expected 'task' or 'data', got '" + tokens[0] + "'");
  }

  TaskGraph g;
  for (const Line& line : data_lines) {
    if (line.tokens.size() < 2) fail(origin, line.number, "data line without an id");
    DataRef d;
    d.id = line.tokens[1];
    bool size_seen = false, kind_seen = false;
    for (std::size_t i = 2; i < line.tokens.size(); ++i) {
      const std::string& t = line.tokens[i];
      auto eq = t.find('=');
      if (eq == std::string::npos) fail(origin, line.number, "expected key=value, got '" + t + "'");
      std::string key = t.substr(0, eq), value = t.substr(eq + 1);
      if (key == "size") {
        d.size_bytes = to_int(value, origin, line.number);
        size_seen = true;
      } else if (key == "kind") {
        try {
          d.kind = parse_data_kind(value);
        } catch (const Error&) {
          fail(origin, line.number, "unknown data kind '" + value + "'");
        }
        kind_seen = true;
      } else {
        fail(origin, line.number, "unknown data key '" + key + "'");
      }
    }
    if (!size_seen || !kind_seen) fail(origin, line.number, "data needs size= and kind=");
    try {
      g.add_data(std::move(d));
    } catch (const Error& e) {
      fail(origin, line.number, e.what());
    }
  }
  for (const Line& line : task_lines) {
    if (line.tokens.size() < 2) fail(origin, line.number, "task line without an id");
    TaskSpec t;
    t.id = line.tokens[1];
    bool runtime_seen = false;
    for (std::size_t i = 2; i < line.tokens.size(); ++i) {
      const std::string& tok = line.tokens[i];
      auto eq = tok.find('=');
      if (eq == std::string::npos) fail(origin, line.number, "expected key=value, got '" + tok + "'");
      std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
      if (key == "runtime") {
        t.runtime_s = to_double(value, origin, line.number);
        runtime_seen = true;
      } else if (key == "estimate") {
        t.estimate_s = to_double(value, origin, line.number);
      } else if (key == "priority") {
        t.priority = to_double(value, origin, line.number);
      } else if (key == "group") {
        t.group = value;
      } else if (key == "width") {
        t.width = static_cast<int>(to_int(value, origin, line.number));
      } else if (key == "in") {
        if (!value.empty()) t.inputs = split(value, ',');
      } else if (key == "out") {
        if (!value.empty()) t.outputs = split(value, ',');
      } else {
        fail(origin, line.number, "unknown task key '" + key + "'");
      }
    }
    if (!runtime_seen) fail(origin, line.number, "task needs runtime=");
    try {
      g.add_task(std::move(t));
    } catch (const Error& e) {
      fail(origin, line.number, e.what());
    }
  }
  return g;
}

TaskGraph load_workload(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io, "cannot read workload '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_workload(text, path);
}

std::string serialize_workload(const TaskGraph& graph) {
  std::string out;
  for (const DataId& id : graph.data_ids()) {
    const DataRef& d = graph.data(id);
    out += "data " + d.id + " size=" + std::to_string(d.size_bytes) + " kind=" +
           data_kind_name(d.kind) + "\n";
  }
  for (const TaskId& id : graph.task_ids()) {
    const TaskSpec& t = graph.task(id);
    out += "task " + t.id + " runtime=" + format_double(t.runtime_s);
    if (t.estimate_s) out += " estimate=" + format_double(*t.estimate_s);
    if (t.priority != 0) out += " priority=" + format_double(t.priority);
    if (!t.group.empty()) out += " group=" + t.group;
    if (t.width != 1) out += " width=" + std::to_string(t.width);
    if (!t.inputs.empty()) {
      out += " in=";
      for (std::size_t i = 0; i < t.inputs.size(); ++i)
        out += (i ? "," : "") + t.inputs[i];
    }
    if (!t.outputs.empty()) {
      out += " out=";
      for (std::size_t i = 0; i < t.outputs.size(); ++i)
        out += (i ? "," : "") + t.outputs[i];
    }
    out += "\n";
  }
  return out;
}

void save_workload(const TaskGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write workload '" + path + "'");
  out << serialize_workload(graph);
  if (!out.flush()) raise(Errc::io, "short write to '" + path + "'");
}

}  // namespace mtc
