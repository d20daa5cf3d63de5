#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace almlab::cli {

enum ExitCode { exit_ok = 0, exit_config = 1, exit_nonconvergence = 2 };

struct KeySpec {
  std::string name;
  std::string default_value;  // empty and !required means "unset" (automatic)
  std::string help;
  bool required = false;
};

struct ExperimentSpec {
  std::string name;
  std::string summary;
  std::vector<KeySpec> keys;
};

const std::vector<ExperimentSpec>& experiments();
// throws ConfigError for an unknown name
const ExperimentSpec& find_experiment(const std::string& name);
// key table for --help
std::string describe_keys(const ExperimentSpec& spec);

struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, std::string> parameters;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  bool dry_run = false;
  int threads = 1;
};

// Flat "key = value" text; '#' starts a comment. Throws ConfigError naming the line.
std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& source);
std::map<std::string, std::string> read_config_file(const std::string& path);

// Parameters resolved against an experiment: defaults filled in, unknown keys
// rejected, required keys checked. Typed getters throw ConfigError naming the key.
class Parameters {
public:
  Parameters(const ExperimentSpec& spec, const std::map<std::string, std::string>& given);

  bool is_set(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  int integer(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

// ALMLAB_THREADS, at least 1; defaults to the hardware concurrency.
int thread_cap_from_env();

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// (lowest index) is rethrown after all workers finish.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// Numeric cells are printed with %.12g; the file starts with "# almlab-csv v1".
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  void write(const std::string& path, const std::vector<std::string>& meta) const;

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_number(double v);

// Runs the experiment; messages go to out/err. Returns an ExitCode.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

// Full command line entry point (argv[0] included).
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace almlab::cli
