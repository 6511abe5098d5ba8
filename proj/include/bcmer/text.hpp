#pragma once

#include <bcmer/errors.hpp>

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bcmer::text
{

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v)
{
	char buf[64];
	auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
	if(ec != std::errc{})
		throw FormatError("cannot format value");
	return std::string(buf, end);
}

inline std::string_view trim(std::string_view s)
{
	auto const ws = " \t\r\n";
	auto b = s.find_first_not_of(ws);
	if(b == std::string_view::npos)
		return {};
	auto e = s.find_last_not_of(ws);
	return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
	std::vector<std::string_view> out;
	std::size_t start = 0;
	while(true)
	{
		auto pos = s.find(sep, start);
		out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
		if(pos == std::string_view::npos)
			break;
		start = pos + 1;
	}
	return out;
}

inline double parse_double(std::string_view s)
{
	s = trim(s);
	if(!s.empty() && s.front() == '+')
		s.remove_prefix(1);
	double v = 0.0;
	auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if(ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
		throw FormatError("not a number: '" + std::string(s) + "'");
	return v;
}

inline std::uint64_t parse_uint(std::string_view s)
{
	s = trim(s);
	std::uint64_t v = 0;
	auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if(ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
		throw FormatError("not a non-negative integer: '" + std::string(s) + "'");
	return v;
}

/// Parses `key=value` tokens following a `#tag` on a header line.
/// Returns the value for `key`, throwing when absent.
inline std::string_view header_field(std::string_view line, std::string_view key)
{
	for(auto tok : split(line, ' '))
	{
		if(tok.size() > key.size() && tok.substr(0, key.size()) == key && tok[key.size()] == '=')
			return tok.substr(key.size() + 1);
	}
	throw FormatError("header missing field '" + std::string(key) + "': " + std::string(line));
}

} // namespace bcmer::text
