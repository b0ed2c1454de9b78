#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdm/diagnostics.hpp"
#include "sdm/error.hpp"

namespace sdm {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// White -> deep blue.
std::string cell_colour(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(255.0 + (8.0 - 255.0) * t + 0.5);
    const int g = static_cast<int>(255.0 + (48.0 - 255.0) * t + 0.5);
    const int b = static_cast<int>(255.0 + (107.0 - 255.0) * t + 0.5);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!line.empty() && line.back() == sep) parts.emplace_back();
    return parts;
}

}  // namespace

std::string heatmap_csv(const Matrix& joint) {
    std::ostringstream out;
    out << "prompt_topic";
    for (std::size_t j = 0; j < joint.cols(); ++j) out << ",answer_topic_" << j;
    out << '\n';
    for (std::size_t i = 0; i < joint.rows(); ++i) {
        out << "prompt_topic_" << i;
        for (std::size_t j = 0; j < joint.cols(); ++j) out << ',' << fixed(joint(i, j), 6);
        out << '\n';
    }
    return out.str();
}

Matrix parse_heatmap_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "empty heatmap CSV");
    const auto header = split(line, ',');
    if (header.empty() || header[0] != "prompt_topic") throw Error(ErrorKind::Schema, "bad heatmap CSV header");
    const std::size_t cols = header.size() - 1;
    Matrix out(0, cols);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != cols + 1) throw Error(ErrorKind::Schema, "ragged heatmap CSV row");
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            try {
                row.push_back(std::stod(cells[j]));
            } catch (const std::exception&) {
                throw Error(ErrorKind::Schema, "non-numeric heatmap cell: " + cells[j]);
            }
        }
        out.append_row(row);
    }
    return out;
}

std::string heatmap_svg(const Matrix& joint, const std::string& title) {
    const std::size_t rows = joint.rows();
    const std::size_t cols = joint.cols();
    const double cell = 56.0;
    const double left = 90.0;
    const double top = title.empty() ? 30.0 : 56.0;
    const double width = left + cell * static_cast<double>(cols) + 40.0;
    const double height = top + cell * static_cast<double>(rows) + 70.0;
    const double max_v = joint.data().empty() ? 0.0 : *std::max_element(joint.data().begin(), joint.data().end());

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) {
        svg << "<text x=\"" << width / 2 << "\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">"
            << xml_escape(title) << "</text>\n";
    }
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = joint(i, j);
            const double t = max_v > 0.0 ? v / max_v : 0.0;
            const double x = left + cell * static_cast<double>(j);
            const double y = top + cell * static_cast<double>(i);
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << cell_colour(t) << "\" stroke=\"#cccccc\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"" << (t > 0.55 ? "white" : "black")
                << "\">" << fixed(v, 3) << "</text>\n";
        }
    }
    for (std::size_t j = 0; j < cols; ++j) {
        svg << "<text x=\"" << left + cell * (static_cast<double>(j) + 0.5) << "\" y=\""
            << top + cell * static_cast<double>(rows) + 18 << "\" font-size=\"12\" text-anchor=\"middle\">" << j
            << "</text>\n";
    }
    for (std::size_t i = 0; i < rows; ++i) {
        svg << "<text x=\"" << left - 8 << "\" y=\"" << top + cell * (static_cast<double>(i) + 0.5) + 4
            << "\" font-size=\"12\" text-anchor=\"end\">" << i << "</text>\n";
    }
    svg << "<text x=\"" << left + cell * static_cast<double>(cols) / 2 << "\" y=\""
        << top + cell * static_cast<double>(rows) + 44 << "\" font-size=\"14\" text-anchor=\"middle\">"
        << "Answer topic</text>\n";
    const double ylab_x = left - 50;
    const double ylab_y = top + cell * static_cast<double>(rows) / 2;
    svg << "<text x=\"" << ylab_x << "\" y=\"" << ylab_y << "\" font-size=\"14\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 " << ylab_x << ' ' << ylab_y << ")\">Prompt topic</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IO, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorKind::IO, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IO, "cannot rename into " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IO, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void render_heatmap(const JointTopicMatrix& joint, const std::filesystem::path& out_svg,
                    const std::filesystem::path& out_csv, const std::string& title) {
    write_text_atomic(out_csv, heatmap_csv(joint.probs));
    write_text_atomic(out_svg, heatmap_svg(joint.probs, title));
}

}  // namespace sdm
