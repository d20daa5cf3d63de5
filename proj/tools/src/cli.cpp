#include <CLI11.hpp>

#include <ostream>

#include "almlab/errors.hpp"
#include "almlab_cli/cli.hpp"

namespace almlab::cli {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string levels, gamma0, alpha, beta, n;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool dry_run = false;
  std::vector<std::string> set;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "flat key = value config file");
  sub->add_option("--out", f.out, "output directory (default out)");
  sub->add_option("--levels", f.levels, "refinement levels (key levels)");
  sub->add_option("--seed", f.seed, "random seed (default 1)")->each([&f](const std::string&) { f.seed_given = true; });
  sub->add_option("--gamma0", f.gamma0, "stabilisation parameter (key gamma0)");
  sub->add_option("--alpha", f.alpha, "compliance (key alpha)");
  sub->add_option("--beta", f.beta, "obstacle compliance (key beta)");
  sub->add_option("--n", f.n, "problem count or mesh size (key n)");
  sub->add_option("--set", f.set, "override any key, key=value (repeatable)");
  sub->add_flag("--dry-run", f.dry_run, "validate the configuration and print the plan");
}

ExperimentConfig build(const std::string& experiment, const Flags& f) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  std::map<std::string, std::string> kv;
  if (!f.config.empty()) kv = read_config_file(f.config);
  auto take = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::string();
    const std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (const std::string e = take("experiment"); !e.empty() && e != experiment)
    throw ConfigError("key 'experiment' in the config file names " + e + ", not " + experiment);
  if (const std::string o = take("output_dir"); !o.empty()) cfg.output_dir = o;
  if (const std::string s = take("seed"); !s.empty()) {
    try {
      std::size_t pos = 0;
      cfg.seed = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("key 'seed' expects a nonnegative integer, got '" + s + "'");
    }
  }
  const std::pair<const char*, const std::string*> named[] = {
      {"levels", &f.levels}, {"gamma0", &f.gamma0}, {"alpha", &f.alpha}, {"beta", &f.beta}, {"n", &f.n}};
  for (const auto& [key, value] : named)
    if (!value->empty()) kv[key] = *value;
  for (const auto& s : f.set) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed_given) cfg.seed = f.seed;
  cfg.parameters = kv;
  cfg.dry_run = f.dry_run;
  cfg.threads = thread_cap_from_env();
  return cfg;
}

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"almlab: augmented Lagrangian finite element experiments"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 configuration error, 2 solver non-convergence.\n"
             "ALMLAB_THREADS caps the number of concurrent sweep points.");
  Flags flags;
  std::string chosen;
  for (const auto& spec : experiments()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.summary);
    add_flags(sub, flags);
    sub->footer(describe_keys(spec));
    sub->callback([&chosen, name = spec.name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  try {
    return run(build(chosen, flags), out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace almlab::cli
