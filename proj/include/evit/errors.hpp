#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evit {

// Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Precondition violations: bad lengths, non-finite values, k > N, ...
class invalid_input_error : public error {
public:
  using error::error;
};

// Normal-condition statistics unusable (zero or non-finite spread,
// or no undamaged rows to estimate from).
class degenerate_normal_condition_error : public error {
public:
  using error::error;
};

// All structures coincide in attribute space; similarity undefined.
class degenerate_population_error : public error {
public:
  using error::error;
};

// Pearson correlation undefined (an argument has zero variance).
class undefined_correlation_error : public error {
public:
  using error::error;
};

// Optimiser hit a non-finite loss; carries the failing epoch.
class training_diverged_error : public error {
public:
  training_diverged_error(const std::string& what, int epoch)
      : error(what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

// A config value failed validation; carries the offending field name.
class config_validation_error : public error {
public:
  config_validation_error(const std::string& field, const std::string& what)
      : error("config field '" + field + "': " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Filesystem failure; carries the path involved.
class io_error : public error {
public:
  io_error(const std::string& what, const std::string& path)
      : error(what + ": " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

}  // namespace evit
