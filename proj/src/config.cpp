#include "ripple/config.hpp"

#include "ripple/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace ripple {

OutputFormat output_format_from_string(std::string_view name)
{
    if (name == "csv")
        return OutputFormat::Csv;
    if (name == "json")
        return OutputFormat::Json;
    throw ConfigError(fmt::format("unknown output format '{}' (expected csv or json)", name));
}

std::string_view to_string(OutputFormat format)
{
    return format == OutputFormat::Json ? "json" : "csv";
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text)
{
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw ConfigError(fmt::format("'{}' is not a finite number", text));
    return value;
}

unsigned long long parse_count(std::string_view text)
{
    unsigned long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(fmt::format("'{}' is not a non-negative integer", text));
    return value;
}

struct Field {
    std::string_view section;
    std::string_view key;
    std::function<void(RunConfig&, std::string_view)> read;
    std::function<std::string(const RunConfig&)> write;
};

template <class Get>
Field number(std::string_view section, std::string_view key, Get get)
{
    return {section, key,
            [get](RunConfig& c, std::string_view v) { get(c) = parse_double(v); },
            [get](const RunConfig& c) { return fmt::format("{:.17g}", get(c)); }};
}

template <class Get>
Field count(std::string_view section, std::string_view key, Get get)
{
    return {section, key,
            [get](RunConfig& c, std::string_view v) {
                using T = std::remove_reference_t<decltype(get(c))>;
                get(c) = static_cast<T>(parse_count(v));
            },
            [get](const RunConfig& c) { return fmt::format("{}", get(c)); }};
}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        number("cell", "v_ocv", [](auto& c) -> auto& { return c.cell.v_ocv; }),
        number("cell", "r0", [](auto& c) -> auto& { return c.cell.r0; }),
        number("cell", "l0", [](auto& c) -> auto& { return c.cell.l0; }),
        number("cell", "r_sei", [](auto& c) -> auto& { return c.cell.r_sei; }),
        number("cell", "c_sei", [](auto& c) -> auto& { return c.cell.c_sei; }),
        number("cell", "c_dl", [](auto& c) -> auto& { return c.cell.c_dl; }),
        number("cell", "rw1", [](auto& c) -> auto& { return c.cell.rw1; }),
        number("cell", "cw1", [](auto& c) -> auto& { return c.cell.cw1; }),
        number("cell", "rw2", [](auto& c) -> auto& { return c.cell.rw2; }),
        number("cell", "cw2", [](auto& c) -> auto& { return c.cell.cw2; }),
        number("cell", "i0_int", [](auto& c) -> auto& { return c.cell.electrochem.exchange_current; }),
        number("cell", "alpha_int", [](auto& c) -> auto& { return c.cell.electrochem.transfer_coeff; }),
        count("cell", "electrons", [](auto& c) -> auto& { return c.cell.electrochem.electrons; }),
        number("cell", "temperature", [](auto& c) -> auto& { return c.cell.electrochem.temperature; }),
        number("cell", "alpha_ageing", [](auto& c) -> auto& { return c.cell.electrochem.ageing_alpha; }),
        number("cell", "k_ageing", [](auto& c) -> auto& { return c.cell.electrochem.ageing_prefactor; }),
        number("cell", "k_ec", [](auto& c) -> auto& { return c.cell.side_reactions.ec.rate_prefactor; }),
        number("cell", "alpha_ec", [](auto& c) -> auto& { return c.cell.side_reactions.ec.cathodic_alpha; }),
        number("cell", "k_dmc", [](auto& c) -> auto& { return c.cell.side_reactions.dmc.rate_prefactor; }),
        number("cell", "alpha_dmc", [](auto& c) -> auto& { return c.cell.side_reactions.dmc.cathodic_alpha; }),
        number("cell", "k_plating", [](auto& c) -> auto& { return c.cell.side_reactions.plating.rate_prefactor; }),
        number("cell", "alpha_plating", [](auto& c) -> auto& { return c.cell.side_reactions.plating.cathodic_alpha; }),
        number("sweep", "f_min", [](auto& c) -> auto& { return c.sweep.f_min; }),
        number("sweep", "f_max", [](auto& c) -> auto& { return c.sweep.f_max; }),
        count("sweep", "points_per_decade", [](auto& c) -> auto& { return c.sweep.points_per_decade; }),
        number("sweep", "i_dc", [](auto& c) -> auto& { return c.sweep.i_dc; }),
        number("sweep", "i_ac", [](auto& c) -> auto& { return c.sweep.i_ac; }),
        number("sim", "dt", [](auto& c) -> auto& { return c.sim.dt; }),
        number("sim", "duration", [](auto& c) -> auto& { return c.sim.duration; }),
        number("sim", "tolerance", [](auto& c) -> auto& { return c.sim.tolerance; }),
        count("sim", "max_cycles", [](auto& c) -> auto& { return c.sim.max_cycles; }),
        {"output", "format",
         [](RunConfig& c, std::string_view v) { c.output.format = output_format_from_string(v); },
         [](const RunConfig& c) { return std::string(to_string(c.output.format)); }},
        {"output", "path",
         [](RunConfig& c, std::string_view v) { c.output.path = std::string(v); },
         [](const RunConfig& c) { return c.output.path; }},
        count("output", "stride", [](auto& c) -> auto& { return c.output.stride; }),
    };
    return table;
}

} // namespace

void RunConfig::validate() const
{
    cell.validate();
    if (!(sweep.f_min > 0.0 && sweep.f_min < sweep.f_max))
        throw ConfigError("[sweep] requires 0 < f_min < f_max");
    if (sweep.points_per_decade < 1)
        throw ConfigError("[sweep] points_per_decade must be at least 1");
    if (!(sweep.i_ac >= 0.0))
        throw ConfigError("[sweep] i_ac must be non-negative");
    if (!(sim.dt >= 0.0))
        throw ConfigError("[sim] dt must be non-negative (0 = automatic)");
    if (!(sim.duration >= 0.0))
        throw ConfigError("[sim] duration must be non-negative");
    if (!(sim.tolerance > 0.0))
        throw ConfigError("[sim] tolerance must be positive");
    if (sim.max_cycles < 1)
        throw ConfigError("[sim] max_cycles must be at least 1");
    if (output.stride < 1)
        throw ConfigError("[output] stride must be at least 1");
}

RunConfig parse_config(std::string_view text, std::string_view source)
{
    RunConfig config;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const auto where = [&] { return fmt::format("{}:{}", source, line_no); };

        if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(fmt::format("{}: malformed section header", where()));
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section != "cell" && section != "sweep" && section != "sim" && section != "output")
                throw ConfigError(fmt::format("{}: unknown section [{}]", where(), section));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(fmt::format("{}: expected 'key = value'", where()));
        if (section.empty())
            throw ConfigError(fmt::format("{}: key outside of a section", where()));
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const Field* field = nullptr;
        for (const Field& f : fields()) {
            if (f.section == section && f.key == key)
                field = &f;
        }
        if (field == nullptr)
            throw ConfigError(fmt::format("{}: unknown key '{}' in [{}]", where(), key, section));
        try {
            field->read(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}: [{}] {}: {}", where(), section, key, e.what()));
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", source, e.what()));
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.string());
}

std::string format_config(const RunConfig& config)
{
    std::string out;
    std::string_view current;
    for (const Field& f : fields()) {
        if (f.section != current) {
            if (!current.empty())
                out += '\n';
            out += fmt::format("[{}]\n", f.section);
            current = f.section;
        }
        out += fmt::format("{} = {}\n", f.key, f.write(config));
    }
    return out;
}

} // namespace ripple
