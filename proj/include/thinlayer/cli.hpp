#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thinlayer {

struct CliInvocation {
    std::string subcommand;
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;  // empty means output.dir from the config
    bool plot = false;
};

/// Runs one subcommand. 0 on success, 1 on numerical failure, 2 on configuration errors.
int dispatch(const CliInvocation& inv, std::ostream& out, std::ostream& err);

/// Parses arguments and dispatches; usage errors return 2.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace thinlayer
