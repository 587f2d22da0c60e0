#include "promisetune/objectives.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

extern char** environ;

namespace promisetune {

OfflineTable::OfflineTable(ConfigSpace space, std::map<Configuration, double> rows)
    : space_(std::move(space)), rows_(std::move(rows)) {}

double OfflineTable::lookup(const Configuration& c) const {
  auto it = rows_.find(c);
  if (it == rows_.end()) throw LoadError("configuration not present in the offline table");
  return it->second;
}

Objective OfflineTable::objective(std::string name) const {
  auto self = std::make_shared<const OfflineTable>(*this);
  return Objective{std::move(name), "offline table",
                   [self](const Configuration& c) { return self->lookup(c); }};
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::optional<long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0' || v < -1000000000L || v > 1000000000L) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (*end != '\0') return std::nullopt;
  return v;
}

}  // namespace

OfflineTable parse_offline(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_row(line);
      break;
    }
  }
  if (header.size() < 2 || header.back() != "performance") {
    throw LoadError("header must list option names followed by 'performance'");
  }
  const std::size_t d = header.size() - 1;

  std::vector<std::vector<std::string>> cells;
  std::vector<double> performance;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_row(line);
    if (fields.size() != header.size()) {
      throw LoadError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const auto perf = parse_double(fields.back());
    if (!perf) {
      throw LoadError("line " + std::to_string(line_no) + ": non-numeric performance '" +
                      fields.back() + "'");
    }
    fields.pop_back();
    for (const auto& f : fields) {
      if (f.empty()) throw LoadError("line " + std::to_string(line_no) + ": empty field");
    }
    cells.push_back(std::move(fields));
    performance.push_back(*perf);
  }
  if (cells.empty()) throw LoadError("offline table has no rows");

  std::vector<OptionDef> options;
  std::vector<std::vector<std::string>> labels(d);
  for (std::size_t j = 0; j < d; ++j) {
    bool integral = true;
    std::set<long> ints;
    std::set<std::string> strings;
    for (const auto& row : cells) {
      strings.insert(row[j]);
      if (auto v = parse_int(row[j])) {
        ints.insert(*v);
      } else {
        integral = false;
      }
    }
    if (integral && ints == std::set<long>{0, 1}) {
      options.push_back(OptionDef::binary(header[j]));
    } else if (integral) {
      options.push_back(OptionDef::integer(header[j], static_cast<int>(*ints.begin()),
                                           static_cast<int>(*ints.rbegin())));
    } else {
      if (strings.size() < 2) throw LoadError("column '" + header[j] + "' has a single label");
      labels[j].assign(strings.begin(), strings.end());
      options.push_back(OptionDef::enumerated(header[j], labels[j]));
    }
  }
  ConfigSpace space(std::move(options));

  std::map<Configuration, double> rows;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    Configuration c;
    for (std::size_t j = 0; j < d; ++j) {
      if (labels[j].empty()) {
        c.values.push_back(static_cast<int>(*parse_int(cells[r][j])));
      } else {
        const auto it = std::lower_bound(labels[j].begin(), labels[j].end(), cells[r][j]);
        c.values.push_back(static_cast<int>(it - labels[j].begin()));
      }
    }
    auto [it, inserted] = rows.emplace(c, performance[r]);
    if (!inserted && it->second != performance[r]) {
      throw LoadError("conflicting duplicate rows for one configuration");
    }
  }
  if (static_cast<double>(rows.size()) != space.cardinality()) {
    throw LoadError("offline table covers " + std::to_string(rows.size()) +
                    " configurations but its inferred space has " +
                    std::to_string(static_cast<long long>(space.cardinality())));
  }
  return OfflineTable(std::move(space), std::move(rows));
}

OfflineTable load_offline(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_offline(text.str());
}

std::string format_offline(const OfflineTable& table) {
  std::ostringstream os;
  for (const auto& opt : table.space().options()) os << opt.name << ',';
  os << "performance\n";
  char buf[32];
  for (const auto& [config, perf] : table.rows()) {
    for (std::size_t j = 0; j < config.values.size(); ++j) {
      os << table.space().option(j).format_value(config.values[j]) << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", perf);
    os << buf << '\n';
  }
  return os.str();
}

void save_offline(const OfflineTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write '" + path + "'");
  out << format_offline(table);
}

std::string substitute_template(const std::string& templ, const ConfigSpace& space,
                                const Configuration& c) {
  std::string out;
  std::size_t pos = 0;
  while (pos < templ.size()) {
    const auto open = templ.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = templ.find('}', open);
    if (close == std::string::npos) break;
    out.append(templ, pos, open - pos);
    const auto index = space.index_of(templ.substr(open + 1, close - open - 1));
    if (index) {
      out += space.option(*index).format_value(c.values[*index]);
    } else {
      out.append(templ, open, close - open + 1);
    }
    pos = close + 1;
  }
  out.append(templ, pos);
  return out;
}

std::string run_command(const std::string& command, double timeout_seconds) {
  int fds[2];
  if (pipe(fds) != 0) throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_addclose(&actions, fds[1]);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  std::string shell = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  char* argv[] = {shell.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw SpawnFailure("cannot spawn '" + command + "': " + std::strerror(rc));
  }

  using Clock = std::chrono::steady_clock;
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(timeout_seconds));
  std::string output;
  char buf[4096];
  bool timed_out = false;
  for (;;) {
    int wait_ms = -1;
    if (timeout_seconds > 0.0) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) {
        timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(left.count());
    }
    pollfd p{fds[0], POLLIN, 0};
    const int ready = poll(&p, 1, wait_ms);
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      timed_out = true;
      break;
    }
    const ssize_t n = read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  if (timed_out) kill(-pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) {
    throw TimeoutFailure("'" + command + "' exceeded " + std::to_string(timeout_seconds) + " s");
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw SpawnFailure("'" + command + "' exited with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  return output;
}

Objective command_objective(const std::string& templ, const std::string& parser_regex,
                            double timeout_seconds, const ConfigSpace& space) {
  if (timeout_seconds < 0.0) throw Error("timeout must be non-negative");
  auto pattern = std::make_shared<const std::regex>(parser_regex);
  if (pattern->mark_count() < 1) throw Error("regex must contain a capture group");
  auto lock = std::make_shared<std::mutex>();
  return Objective{
      "command", templ,
      [=](const Configuration& c) {
        const std::string command = substitute_template(templ, space, c);
        std::string output;
        {
          std::lock_guard guard(*lock);
          output = run_command(command, timeout_seconds);
        }
        std::smatch match;
        if (!std::regex_search(output, match, *pattern)) {
          throw ParseFailure("no match for the performance regex in output of '" + command +
                             "'");
        }
        const auto value = parse_double(match[1].str());
        if (!value || !std::isfinite(*value)) {
          throw ParseFailure("captured text '" + match[1].str() + "' is not a number");
        }
        return *value;
      }};
}

}  // namespace promisetune
