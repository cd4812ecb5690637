#pragma once

#include <stdexcept>
#include <string>

namespace kaft {

// Bad input, bad config, missing files: anything the user can fix.
// The CLI maps these to exit code 2; everything else is exit code 1.
class UserError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Backend (endpoint/mock/simulator) failure, after retries where applicable.
class BackendError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Probe failure tied to a specific sample and query variant.
class ProbeError : public std::runtime_error {
  public:
    ProbeError(const std::string& msg, std::string sample_id, int variant_index)
        : std::runtime_error(msg), sample_id(std::move(sample_id)), variant_index(variant_index) {}

    std::string sample_id;
    int variant_index;
};

}  // namespace kaft
