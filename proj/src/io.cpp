#include "ripple/io.hpp"

#include "ripple/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>
#include "json.hpp"

namespace ripple {

const std::vector<double>& Table::column(std::string_view name) const
{
    for (std::size_t k = 0; k < columns.size(); ++k) {
        if (columns[k] == name)
            return data[k];
    }
    throw ConfigError(fmt::format("missing column '{}'", name));
}

const std::string* Table::find_meta(std::string_view key) const
{
    for (const auto& [k, v] : meta) {
        if (k == key)
            return &v;
    }
    return nullptr;
}

std::string format_number(double value)
{
    return fmt::format("{:.17g}", value);
}

namespace {

std::string csv_field(std::string_view text)
{
    if (text.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(text);
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

// Splits one CSV record; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv(std::string_view line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                out.back() += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else if (ch != '\r') {
            out.back() += ch;
        }
    }
    return out;
}

double parse_cell(std::string_view text, std::string_view where)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t'))
        text.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError(fmt::format("{}: '{}' is not a number", where, text));
    return value;
}

Table parse_csv(std::string_view text, std::string_view source)
{
    Table table;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (line.front() == '#') {
            line.remove_prefix(1);
            const auto eq = line.find('=');
            if (eq != std::string_view::npos) {
                std::string key(line.substr(0, eq));
                std::string value(line.substr(eq + 1));
                const auto strip = [](std::string& s) {
                    s.erase(0, s.find_first_not_of(' '));
                    s.erase(s.find_last_not_of(' ') + 1);
                };
                strip(key);
                strip(value);
                table.meta.emplace_back(std::move(key), std::move(value));
            }
            continue;
        }
        const std::vector<std::string> fields = split_csv(line);
        if (!have_header) {
            table.columns = fields;
            table.data.assign(fields.size(), {});
            have_header = true;
            continue;
        }
        const std::string where = fmt::format("{}:{}", source, line_no);
        if (fields.size() != table.columns.size())
            throw ConfigError(fmt::format("{}: expected {} fields, found {}", where, table.columns.size(), fields.size()));
        for (std::size_t k = 0; k < fields.size(); ++k)
            table.data[k].push_back(parse_cell(fields[k], where));
    }
    if (!have_header)
        throw ConfigError(fmt::format("{}: no header row", source));
    return table;
}

Table parse_json(std::string_view text, std::string_view source)
{
    Table table;
    try {
        const auto doc = nlohmann::ordered_json::parse(text);
        if (doc.contains("meta")) {
            for (const auto& [key, value] : doc.at("meta").items())
                table.meta.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
        }
        for (const auto& [key, values] : doc.at("columns").items()) {
            table.columns.push_back(key);
            table.data.push_back(values.get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: invalid JSON table: {}", source, e.what()));
    }
    for (const auto& column : table.data) {
        if (column.size() != table.rows())
            throw ConfigError(fmt::format("{}: columns differ in length", source));
    }
    return table;
}

} // namespace

std::string to_csv(const Table& table)
{
    std::string out;
    for (const auto& [key, value] : table.meta)
        out += fmt::format("# {}={}\n", key, value);
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
        if (k > 0)
            out += ',';
        out += csv_field(table.columns[k]);
    }
    out += '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t k = 0; k < table.columns.size(); ++k) {
            if (k > 0)
                out += ',';
            out += format_number(table.data[k][r]);
        }
        out += '\n';
    }
    return out;
}

std::string to_json(const Table& table)
{
    nlohmann::ordered_json doc;
    doc["meta"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : table.meta)
        doc["meta"][key] = value;
    doc["columns"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < table.columns.size(); ++k)
        doc["columns"][table.columns[k]] = table.data[k];
    return doc.dump(2) + "\n";
}

std::string render(const Table& table, OutputFormat format)
{
    return format == OutputFormat::Json ? to_json(table) : to_csv(table);
}

Table parse_table(std::string_view text, std::string_view source)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{')
        return parse_json(text, source);
    return parse_csv(text, source);
}

Table read_table(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_table(buffer.str(), path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    std::filesystem::path tmp = path;
    tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ConfigError(fmt::format("cannot write '{}'", path.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw ConfigError(fmt::format("failed writing '{}'", path.string()));
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ConfigError(fmt::format("cannot replace '{}': {}", path.string(), ec.message()));
    }
}

Table trace_table(const SimulationTrace& trace)
{
    Table t;
    t.columns = {"t_s", "i_load_a", "v_terminal_v", "eta_ct_v", "i_int_a", "i_dl_a", "ageing_rate_a"};
    t.data = {trace.time, trace.i_load, trace.v_terminal, trace.eta_ct, trace.i_int, trace.i_dl, trace.ageing_rate};
    return t;
}

Table ap_curve_table(const ApCurve& curve)
{
    Table t;
    t.meta = {
        {"i_dc", format_number(curve.meta.i_dc)},
        {"i_ac", format_number(curve.meta.i_ac)},
        {"profile", std::string(to_string(curve.meta.kind))},
        {"cell_fingerprint", curve.meta.cell_fingerprint},
    };
    t.columns = {"f_hz", "ap"};
    t.data = {curve.frequencies(), curve.values()};
    return t;
}

ApCurve ap_curve_from_table(const Table& table)
{
    ApCurve curve;
    const auto& f = table.column("f_hz");
    const auto& ap = table.column("ap");
    for (std::size_t k = 0; k < f.size(); ++k)
        curve.points.push_back({f[k], ap[k]});
    if (const auto* v = table.find_meta("i_dc"))
        curve.meta.i_dc = parse_cell(*v, "meta i_dc");
    if (const auto* v = table.find_meta("i_ac"))
        curve.meta.i_ac = parse_cell(*v, "meta i_ac");
    if (const auto* v = table.find_meta("profile"))
        curve.meta.kind = profile_kind_from_string(*v);
    if (const auto* v = table.find_meta("cell_fingerprint"))
        curve.meta.cell_fingerprint = *v;
    return curve;
}

MeasuredTrace measured_trace_from_table(const Table& table)
{
    MeasuredTrace trace{table.column("t_s"), table.column("i_a"), table.column("v_v")};
    trace.validate();
    return trace;
}

} // namespace ripple
