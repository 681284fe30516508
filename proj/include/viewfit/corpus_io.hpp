#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "viewfit/errors.hpp"
#include "viewfit/profile.hpp"

namespace viewfit {

enum class CorpusFormat { Csv, Json };

inline CorpusFormat detect_format(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".json") return CorpusFormat::Json;
    return CorpusFormat::Csv;
}

namespace detail {

inline std::int64_t parse_count(const std::string& token, std::size_t line_no) {
    std::size_t pos = 0;
    std::int64_t value = 0;
    try {
        value = std::stoll(token, &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": not an integer: '" + token + "'");
    }
    if (pos != token.size())
        throw ParseError("line " + std::to_string(line_no) + ": not an integer: '" + token + "'");
    if (value < 0)
        throw ParseError("line " + std::to_string(line_no) + ": negative count: " + token);
    return value;
}

}  // namespace detail

// CSV: one profile per line, `id,views_m0,views_m1,...`; variable-length rows.
inline std::vector<ViewProfile> load_corpus_csv(std::istream& in) {
    std::vector<ViewProfile> corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::stringstream row(line);
        std::string token;
        if (!std::getline(row, token, ',') || token.empty())
            throw ParseError("line " + std::to_string(line_no) + ": missing id");

        ViewProfile p;
        p.id = token;
        while (std::getline(row, token, ','))
            p.monthly_views.push_back(detail::parse_count(token, line_no));
        if (p.monthly_views.empty())
            throw ParseError("line " + std::to_string(line_no) + ": no view counts");
        if (!seen.insert(p.id).second) throw DuplicateId(p.id);
        corpus.push_back(std::move(p));
    }
    return corpus;
}

// JSON: array of objects { "id": string, "monthly_views": [int, ...] }.
inline std::vector<ViewProfile> load_corpus_json(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_null()) return {};
    if (!doc.is_array()) throw ParseError("top-level JSON value must be an array");

    std::vector<ViewProfile> corpus;
    std::unordered_set<std::string> seen;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("id") || !item.contains("monthly_views"))
            throw ParseError("each record needs 'id' and 'monthly_views'");
        ViewProfile p;
        p.id = item["id"].get<std::string>();
        if (p.id.empty()) throw ParseError("empty id");
        for (const auto& v : item["monthly_views"]) {
            if (!v.is_number_integer())
                throw ParseError("non-integer view count for id " + p.id);
            std::int64_t n = v.get<std::int64_t>();
            if (n < 0) throw ParseError("negative view count for id " + p.id);
            p.monthly_views.push_back(n);
        }
        if (p.monthly_views.empty()) throw ParseError("no view counts for id " + p.id);
        if (!seen.insert(p.id).second) throw DuplicateId(p.id);
        corpus.push_back(std::move(p));
    }
    return corpus;
}

inline std::vector<ViewProfile> load_corpus(const std::filesystem::path& path,
                                            CorpusFormat format) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path.string());
    return format == CorpusFormat::Json ? load_corpus_json(in) : load_corpus_csv(in);
}

inline std::vector<ViewProfile> load_corpus(const std::filesystem::path& path) {
    return load_corpus(path, detect_format(path));
}

inline void save_corpus_csv(const std::vector<ViewProfile>& corpus, std::ostream& out) {
    for (const auto& p : corpus) {
        out << p.id;
        for (auto v : p.monthly_views) out << ',' << v;
        out << '\n';
    }
}

}  // namespace viewfit
