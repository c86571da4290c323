#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scpf {

// Thrown when a config fails validation. Each message carries its
// assumption label (e.g. "C5: theta_lower must be positive") so the CLI
// can print them verbatim and exit with the config-rejection code.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> msgs)
        : std::runtime_error(join(msgs)), messages(std::move(msgs)) {}
    explicit ConfigError(const std::string& msg)
        : ConfigError(std::vector<std::string>{msg}) {}

    std::vector<std::string> messages;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& m : v) {
            if (!s.empty()) s += "\n";
            s += m;
        }
        return s;
    }
};

// Runtime solver failure: divergence, loss of positivity, iteration caps.
// Carries the step index so the caller can report where the run died.
class NumericsError : public std::runtime_error {
public:
    NumericsError(const std::string& what, int step_index = -1)
        : std::runtime_error(step_index >= 0
              ? what + " (step " + std::to_string(step_index) + ")"
              : what),
          step(step_index) {}
    int step;
};

} // namespace scpf
