#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/evaluation.hpp>
#include <bcmer/text.hpp>

#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bcmer
{

/// Flat `key=value` run configuration. List values are comma-separated;
/// `#` starts a comment line. Keys are kept verbatim so the exact effective
/// configuration can be echoed into reports.
class RunConfig
{
public:
	static std::vector<std::string> const& known_keys()
	{
		static std::vector<std::string> const keys{
			"env",          "teacher",         "teacher_command",     "qlearn_episodes",   "qlearn_alpha",
			"qlearn_gamma", "qlearn_epsilon_start", "qlearn_epsilon_end", "sizes",         "backends",
			"baselines",    "seeds",           "episodes",            "output",            "workers",
		};
		return keys;
	}

	RunConfig()
	{
		values_ = {
			{"env", "predator-prey"},
			{"teacher", "scripted"},
			{"sizes", "500"},
			{"backends", "brute,kdtree,balltree"},
			{"baselines", "entropy:5,entropy:10,gini:5,gini:10"},
			{"seeds", "0"},
			{"episodes", "200"},
			{"output", "."},
			{"workers", "1"},
		};
	}

	/// Applies the file's settings on top of `base`.
	static RunConfig parse(std::istream& is, RunConfig cfg = {})
	{
		std::string line;
		std::size_t lineno = 0;
		while(std::getline(is, line))
		{
			++lineno;
			auto t = text::trim(line);
			if(t.empty() || t.front() == '#')
				continue;
			auto eq = t.find('=');
			if(eq == std::string_view::npos)
				throw FormatError("config line " + std::to_string(lineno) + ": expected key=value");
			cfg.set(std::string(text::trim(t.substr(0, eq))), std::string(text::trim(t.substr(eq + 1))));
		}
		return cfg;
	}

	void set(std::string const& key, std::string value)
	{
		bool known = false;
		for(auto const& k : known_keys())
			known = known || k == key;
		if(!known)
			throw NameError("unknown config key '" + key + "'");
		values_[key] = std::move(value);
	}

	bool has(std::string const& key) const { return values_.contains(key); }

	std::string const& get(std::string const& key) const
	{
		auto it = values_.find(key);
		if(it == values_.end())
			throw NameError("config key '" + key + "' not set");
		return it->second;
	}

	std::vector<std::string> list(std::string const& key) const
	{
		std::vector<std::string> out;
		for(auto v : text::split(get(key), ','))
			if(!v.empty())
				out.emplace_back(v);
		return out;
	}

	/// Canonical echo: one `key=value` per line, keys sorted.
	std::string echo() const
	{
		std::ostringstream os;
		for(auto const& [k, v] : values_)
			os << k << '=' << v << '\n';
		return os.str();
	}

	SuiteConfig to_suite() const
	{
		SuiteConfig s;
		s.envs = list("env");
		for(auto const& e : s.envs)
			make_environment(e);
		s.sizes.clear();
		for(auto const& v : list("sizes"))
			s.sizes.push_back(text::parse_uint(v));
		s.backends.clear();
		for(auto const& v : list("backends"))
			s.backends.push_back(parse_backend(v));
		s.baselines.clear();
		for(auto const& v : list("baselines"))
		{
			auto parts = text::split(v, ':');
			if(parts.size() != 2)
				throw FormatError("baseline '" + v + "' must look like criterion:depth");
			s.baselines.push_back({parse_criterion(parts[0]), text::parse_uint(parts[1])});
		}
		s.seeds.clear();
		for(auto const& v : list("seeds"))
			s.seeds.push_back(text::parse_uint(v));
		s.episodes = text::parse_uint(get("episodes"));
		s.workers = static_cast<unsigned>(text::parse_uint(get("workers")));

		auto const& teacher = get("teacher");
		if(teacher == "scripted")
			s.teacher.kind = TeacherKind::Scripted;
		else if(teacher == "qlearn")
		{
			s.teacher.kind = TeacherKind::QLearn;
			auto num = [&](char const* key, double fallback) {
				return has(key) ? text::parse_double(get(key)) : fallback;
			};
			s.teacher.qlearn.episodes = has("qlearn_episodes") ? text::parse_uint(get("qlearn_episodes"))
			                                                   : s.teacher.qlearn.episodes;
			s.teacher.qlearn.alpha = num("qlearn_alpha", s.teacher.qlearn.alpha);
			s.teacher.qlearn.gamma = num("qlearn_gamma", s.teacher.qlearn.gamma);
			s.teacher.qlearn.epsilon_start = num("qlearn_epsilon_start", s.teacher.qlearn.epsilon_start);
			s.teacher.qlearn.epsilon_end = num("qlearn_epsilon_end", s.teacher.qlearn.epsilon_end);
		}
		else if(teacher == "external")
		{
			s.teacher.kind = TeacherKind::External;
			s.teacher.command = get("teacher_command");
		}
		else
			throw NameError("unknown teacher '" + teacher + "'");
		return s;
	}

private:
	std::map<std::string, std::string> values_;
};

} // namespace bcmer
