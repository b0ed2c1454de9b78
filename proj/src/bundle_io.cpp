#include <fstream>
#include <sstream>

#include "sdm/corpus.hpp"
#include "sdm/error.hpp"

namespace sdm {

using nlohmann::json;

// Layout: one header line, then one line per answer cell in row-major order.
// nlohmann::json keeps object keys sorted, so the output is byte-stable.
void write_bundle(const RunBundle& bundle, std::ostream& out) {
    bundle.validate();
    json header = {
        {"schema", kBundleSchema},
        {"record", "header"},
        {"original_prompt", bundle.original_prompt},
        {"paraphrases", bundle.paraphrases},
        {"m", bundle.m()},
        {"n", bundle.n()},
        {"model_id", bundle.model_id},
        {"sampling_temperature", bundle.sampling_temperature},
        {"created_at", format_timestamp(bundle.created_at)},
        {"provider_trace", bundle.provider_trace},
    };
    out << header.dump() << '\n';
    for (std::size_t m = 0; m < bundle.m(); ++m) {
        for (std::size_t n = 0; n < bundle.n(); ++n) {
            json cell = {{"schema", kBundleSchema},
                         {"record", "answer"},
                         {"m", m},
                         {"n", n},
                         {"text", bundle.answers[m][n]}};
            out << cell.dump() << '\n';
        }
    }
}

RunBundle read_bundle(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto parse_line = [&](const std::string& text) {
        json record;
        try {
            record = json::parse(text);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.is_object() || record.value("schema", "") != kBundleSchema) {
            throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) +
                                               ": missing or unsupported schema version");
        }
        return record;
    };

    if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "empty bundle file");
    ++line_no;
    const json header = parse_line(line);

    RunBundle bundle;
    std::size_t rows = 0;
    std::size_t cols = 0;
    try {
        if (header.at("record") != "header") throw Error(ErrorKind::Schema, "first record is not a header");
        bundle.original_prompt = header.at("original_prompt").get<std::string>();
        bundle.paraphrases = header.at("paraphrases").get<std::vector<std::string>>();
        rows = header.at("m").get<std::size_t>();
        cols = header.at("n").get<std::size_t>();
        bundle.model_id = header.at("model_id").get<std::string>();
        bundle.sampling_temperature = header.at("sampling_temperature").get<double>();
        bundle.created_at = parse_timestamp(header.at("created_at").get<std::string>());
        bundle.provider_trace = header.at("provider_trace");
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("malformed header: ") + e.what());
    }
    if (rows == 0 || cols == 0 || rows != bundle.paraphrases.size()) {
        throw Error(ErrorKind::Schema, "header dimensions disagree with paraphrase list");
    }

    bundle.answers.assign(rows, std::vector<std::string>(cols));
    std::vector<std::vector<bool>> seen(rows, std::vector<bool>(cols, false));
    std::size_t cells = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json cell = parse_line(line);
        std::size_t m = 0;
        std::size_t n = 0;
        try {
            if (cell.at("record") != "answer") throw Error(ErrorKind::Schema, "unexpected record type");
            m = cell.at("m").get<std::size_t>();
            n = cell.at("n").get<std::size_t>();
            if (m >= rows || n >= cols) throw Error(ErrorKind::Schema, "cell index out of range");
            if (seen[m][n]) throw Error(ErrorKind::Schema, "duplicate cell");
            bundle.answers[m][n] = cell.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Schema, "line " + std::to_string(line_no) + ": " + e.what());
        }
        seen[m][n] = true;
        ++cells;
    }
    if (cells != rows * cols) {
        throw Error(ErrorKind::Schema, "bundle has " + std::to_string(cells) + " of " +
                                           std::to_string(rows * cols) + " answer cells");
    }
    bundle.validate();
    return bundle;
}

void save_bundle(const RunBundle& bundle, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IO, "cannot open " + path.string() + " for writing");
    write_bundle(bundle, out);
    if (!out) throw Error(ErrorKind::IO, "write failed: " + path.string());
}

RunBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IO, "cannot open " + path.string());
    return read_bundle(in);
}

}  // namespace sdm
