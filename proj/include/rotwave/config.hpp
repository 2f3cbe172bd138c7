#pragma once

// Flat key = value configuration. Lines starting with '#' are comments;
// list values are comma separated. Every accessor reports the offending key
// in its error message.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rotwave/error.hpp"

namespace rotwave {

namespace detail {

inline std::string trim(std::string_view s)
{
	const auto first = s.find_first_not_of(" \t\r\n");
	if (first == std::string_view::npos)
		return {};
	const auto last = s.find_last_not_of(" \t\r\n");
	return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_list(const std::string& value)
{
	std::vector<std::string> out;
	std::string item;
	std::istringstream in(value);
	while (std::getline(in, item, ','))
		if (auto t = trim(item); !t.empty())
			out.push_back(std::move(t));
	return out;
}

} // namespace detail

class key_value_config {
public:
	key_value_config() = default;

	static key_value_config parse(std::istream& in, const std::string& source = "<config>")
	{
		key_value_config cfg;
		std::string line;
		int line_no = 0;
		while (std::getline(in, line)) {
			++line_no;
			if (const auto hash = line.find('#'); hash != std::string::npos)
				line.erase(hash);
			const std::string body = detail::trim(line);
			if (body.empty())
				continue;
			const auto eq = body.find('=');
			if (eq == std::string::npos)
				throw config_error(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
			const std::string key = detail::trim(std::string_view(body).substr(0, eq));
			if (key.empty())
				throw config_error(source + ":" + std::to_string(line_no) + ": empty key");
			cfg.set(key, detail::trim(std::string_view(body).substr(eq + 1)));
		}
		return cfg;
	}

	static key_value_config load(const std::string& path)
	{
		std::ifstream in(path);
		if (!in)
			throw config_error("cannot open configuration file '" + path + "'");
		return parse(in, path);
	}

	void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

	/// Applies a "key=value" override.
	void apply_override(const std::string& assignment)
	{
		const auto eq = assignment.find('=');
		if (eq == std::string::npos || eq == 0)
			throw config_error("override '" + assignment + "' is not of the form key=value");
		set(detail::trim(std::string_view(assignment).substr(0, eq)),
		    detail::trim(std::string_view(assignment).substr(eq + 1)));
	}

	bool has(const std::string& key) const { return values_.count(key) != 0; }
	void erase(const std::string& key) { values_.erase(key); }
	const std::map<std::string, std::string>& entries() const { return values_; }

	std::string get_string(const std::string& key) const
	{
		const auto it = values_.find(key);
		if (it == values_.end())
			throw config_error(key + ": missing required key");
		return it->second;
	}

	std::string get_string(const std::string& key, const std::string& fallback) const
	{
		return has(key) ? get_string(key) : fallback;
	}

	double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
	double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

	long long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
	long long get_int(const std::string& key, long long fallback) const { return has(key) ? get_int(key) : fallback; }

	bool get_bool(const std::string& key, bool fallback) const
	{
		if (!has(key))
			return fallback;
		std::string v = get_string(key);
		std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
		if (v == "true" || v == "yes" || v == "on" || v == "1")
			return true;
		if (v == "false" || v == "no" || v == "off" || v == "0")
			return false;
		throw config_error(key + ": expected a boolean, got '" + v + "'");
	}

	std::vector<double> get_double_list(const std::string& key) const
	{
		std::vector<double> out;
		for (const auto& item : detail::split_list(get_string(key)))
			out.push_back(to_double(key, item));
		if (out.empty())
			throw config_error(key + ": empty list");
		return out;
	}

	std::vector<long long> get_int_list(const std::string& key) const
	{
		std::vector<long long> out;
		for (const auto& item : detail::split_list(get_string(key)))
			out.push_back(to_int(key, item));
		if (out.empty())
			throw config_error(key + ": empty list");
		return out;
	}

	std::vector<std::string> get_string_list(const std::string& key) const
	{
		auto out = detail::split_list(get_string(key));
		if (out.empty())
			throw config_error(key + ": empty list");
		return out;
	}

	/// Rejects keys outside `known`.
	void check_keys(const std::set<std::string>& known) const
	{
		for (const auto& [key, value] : values_)
			if (!known.count(key))
				throw config_error(key + ": unknown configuration key");
	}

	void write(std::ostream& os) const
	{
		for (const auto& [key, value] : values_)
			os << key << " = " << value << '\n';
	}

private:
	static double to_double(const std::string& key, const std::string& text)
	{
		double v = 0.0;
		const auto* end = text.data() + text.size();
		const auto [ptr, ec] = std::from_chars(text.data(), end, v);
		if (ec != std::errc{} || ptr != end)
			throw config_error(key + ": expected a number, got '" + text + "'");
		return v;
	}

	static long long to_int(const std::string& key, const std::string& text)
	{
		long long v = 0;
		const auto* end = text.data() + text.size();
		const auto [ptr, ec] = std::from_chars(text.data(), end, v);
		if (ec != std::errc{} || ptr != end)
			throw config_error(key + ": expected an integer, got '" + text + "'");
		return v;
	}

	std::map<std::string, std::string> values_;
};

} // namespace rotwave
