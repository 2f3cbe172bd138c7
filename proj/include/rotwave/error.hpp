#pragma once

#include <stdexcept>
#include <string>

namespace rotwave {

/// Process exit codes used by the command line runner.
enum class exit_code : int {
	success = 0,
	decode_ambiguity = 2,
	config_error = 3,
	numerical_failure = 4,
};

class config_error : public std::runtime_error {
public:
	explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class numerical_error : public std::runtime_error {
public:
	explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

class decode_ambiguity : public std::runtime_error {
public:
	decode_ambiguity(int band, const std::string& what) : std::runtime_error(what), band_(band) {}
	int band() const { return band_; }

private:
	int band_;
};

} // namespace rotwave
