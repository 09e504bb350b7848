#include "spintok/corpus_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spintok/util.hpp"

namespace spintok {

namespace {

constexpr char kFeatureMagic[4] = {'S', 'P', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF), static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& what, const std::filesystem::path& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw CorruptionError("truncated " + what + " in " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::vector<std::uint32_t> parse_id_line(const std::string& line, std::uint32_t limit, const std::string& what) {
    std::vector<std::uint32_t> ids;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        std::int64_t v = parse_int(std::string_view(line).substr(i, j - i), what);
        if (v < 0) throw ValidationError(what + " must be non-negative");
        if (static_cast<std::uint64_t>(v) >= limit)
            throw ValidationError(what + " " + std::to_string(v) + " out of range (limit " + std::to_string(limit) + ")");
        ids.push_back(static_cast<std::uint32_t>(v));
        i = j;
    }
    return ids;
}

std::string optional_path_field(const std::optional<std::filesystem::path>& p,
                                const std::filesystem::path& base) {
    if (!p) return "-";
    return std::filesystem::relative(*p, base).string();
}

std::optional<std::filesystem::path> parse_path_field(const std::string& field, const std::filesystem::path& base) {
    if (field == "-") return std::nullopt;
    std::filesystem::path p(field);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

void write_feature_file(const FeatureSequence& seq, const std::filesystem::path& path) {
    seq.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kFeatureMagic, 4);
    put_u32(out, kFeatureVersion);
    put_u32(out, static_cast<std::uint32_t>(seq.dim()));
    put_u32(out, static_cast<std::uint32_t>(seq.frames()));
    put_u32(out, static_cast<std::uint32_t>(std::llround(seq.framerate * 1000.0)));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(seq.data.data()),
              static_cast<std::streamsize>(seq.data.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
}

FeatureSequence read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw FormatError("bad magic in feature file " + path.string());
    std::uint32_t version = get_u32(in, "feature header", path);
    if (version != kFeatureVersion)
        throw FormatError("unsupported feature file version " + std::to_string(version) + " in " + path.string());
    std::uint32_t dim = get_u32(in, "feature header", path);
    std::uint32_t frames = get_u32(in, "feature header", path);
    std::uint32_t millihz = get_u32(in, "feature header", path);
    if (dim == 0) throw FormatError("feature file with dim 0: " + path.string());

    FeatureSequence seq;
    seq.framerate = static_cast<double>(millihz) / 1000.0;
    seq.data.resize(frames, dim);
    std::size_t payload = static_cast<std::size_t>(frames) * dim * sizeof(float);
    in.read(reinterpret_cast<char*>(seq.data.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::size_t>(in.gcount()) != payload)
        throw CorruptionError("feature payload shorter than header promises: " + path.string());
    char extra;
    if (in.read(&extra, 1))
        throw CorruptionError("trailing bytes after feature payload: " + path.string());
    if (!seq.data.allFinite()) throw ValidationError("non-finite values in feature file " + path.string());
    return seq;
}

void write_token_file(const std::vector<TokenSequence>& utterances, const std::filesystem::path& path) {
    if (utterances.empty()) throw ValidationError("token file needs at least one utterance");
    const auto& first = utterances.front();
    for (const auto& u : utterances) {
        u.validate();
        if (u.vocab_size != first.vocab_size || u.framerate != first.framerate ||
            u.deduplicated != first.deduplicated)
            throw ValidationError("all utterances in a token file must share vocab, framerate, and dedup flag");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "#vocab=" << first.vocab_size << " framerate=" << format_double(first.framerate)
        << " dedup=" << (first.deduplicated ? 1 : 0) << "\n";
    for (const auto& u : utterances) {
        for (std::size_t i = 0; i < u.tokens.size(); ++i) {
            if (i) out << ' ';
            out << u.tokens[i];
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TokenSequence> read_token_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty token file: " + path.string());
    std::uint32_t vocab = 0;
    double framerate = 0.0;
    int dedup = -1;
    {
        std::istringstream hs(header);
        std::string field;
        while (hs >> field) {
            if (field.rfind("#vocab=", 0) == 0)
                vocab = static_cast<std::uint32_t>(parse_int(field.substr(7), "vocab"));
            else if (field.rfind("framerate=", 0) == 0)
                framerate = parse_double(field.substr(10), "framerate");
            else if (field.rfind("dedup=", 0) == 0)
                dedup = static_cast<int>(parse_int(field.substr(6), "dedup"));
            else
                throw FormatError("unknown token header field '" + field + "' in " + path.string());
        }
    }
    if (vocab == 0 || framerate <= 0.0 || (dedup != 0 && dedup != 1))
        throw FormatError("malformed token header in " + path.string());

    std::vector<TokenSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        TokenSequence seq;
        seq.vocab_size = vocab;
        seq.framerate = framerate;
        seq.deduplicated = dedup == 1;
        seq.tokens = parse_id_line(line, vocab, "token");
        seq.validate();
        out.push_back(std::move(seq));
    }
    return out;
}

void write_alignment_file(const std::vector<AlignmentSequence>& utterances, const std::filesystem::path& path) {
    if (utterances.empty()) throw ValidationError("alignment file needs at least one utterance");
    std::uint32_t symbols = utterances.front().symbol_count;
    for (const auto& u : utterances) {
        u.validate();
        if (u.symbol_count != symbols)
            throw ValidationError("all utterances in an alignment file must share symbol_count");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "#symbols=" << symbols << "\n";
    for (const auto& u : utterances) {
        for (std::size_t i = 0; i < u.labels.size(); ++i) {
            if (i) out << ' ';
            out << u.labels[i];
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<AlignmentSequence> read_alignment_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty alignment file: " + path.string());
    if (header.rfind("#symbols=", 0) != 0) throw FormatError("malformed alignment header in " + path.string());
    auto symbols = static_cast<std::uint32_t>(parse_int(header.substr(9), "symbols"));
    if (symbols == 0) throw FormatError("alignment symbol count must be >= 1 in " + path.string());

    std::vector<AlignmentSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        AlignmentSequence seq;
        seq.symbol_count = symbols;
        seq.labels = parse_id_line(line, symbols, "alignment label");
        out.push_back(std::move(seq));
    }
    return out;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    out << "#framerate=" << format_double(manifest.framerate) << "\n";
    for (const auto& e : manifest.entries) {
        out << e.utterance_id << '\t' << std::filesystem::relative(e.feature_path, base).string() << '\t'
            << optional_path_field(e.token_path, base) << '\t' << optional_path_field(e.alignment_path, base)
            << '\t' << optional_path_field(e.pair_path, base) << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty manifest: " + path.string());
    if (header.rfind("#framerate=", 0) != 0) throw FormatError("malformed manifest header in " + path.string());

    CorpusManifest manifest;
    manifest.framerate = parse_double(header.substr(11), "framerate");
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 5)
            throw FormatError("manifest line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                              " fields, expected 5");
        ManifestEntry e;
        e.utterance_id = fields[0];
        auto feat = parse_path_field(fields[1], base);
        if (!feat) throw FormatError("manifest line " + std::to_string(lineno) + " missing feature path");
        e.feature_path = *feat;
        e.token_path = parse_path_field(fields[2], base);
        e.alignment_path = parse_path_field(fields[3], base);
        e.pair_path = parse_path_field(fields[4], base);
        for (const auto& id : manifest.entries)
            if (id.utterance_id == e.utterance_id)
                throw ValidationError("duplicate utterance id '" + e.utterance_id + "' in manifest");
        for (const auto* p :
             {&e.feature_path, e.token_path ? &*e.token_path : nullptr, e.alignment_path ? &*e.alignment_path : nullptr,
              e.pair_path ? &*e.pair_path : nullptr}) {
            if (p && !std::filesystem::exists(*p))
                throw ValidationError("manifest references missing file: " + p->string());
        }
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

std::vector<FeatureSequence> load_features(const CorpusManifest& manifest) {
    std::vector<FeatureSequence> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) out.push_back(read_feature_file(e.feature_path));
    return out;
}

std::vector<AlignmentSequence> load_alignments(const CorpusManifest& manifest) {
    std::vector<AlignmentSequence> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        if (!e.alignment_path) throw ValidationError("utterance '" + e.utterance_id + "' has no alignment");
        auto per_file = read_alignment_file(*e.alignment_path);
        if (per_file.size() != 1)
            throw ValidationError("expected one alignment per file for utterance '" + e.utterance_id + "'");
        out.push_back(std::move(per_file.front()));
    }
    return out;
}

std::vector<PairedViews> load_pairs(const CorpusManifest& manifest) {
    std::vector<PairedViews> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        if (!e.pair_path) throw ValidationError("utterance '" + e.utterance_id + "' has no paired view");
        PairedViews pv;
        pv.view_a = read_feature_file(e.feature_path);
        pv.view_b = read_feature_file(*e.pair_path);
        if (e.alignment_path) {
            auto per_file = read_alignment_file(*e.alignment_path);
            if (per_file.size() != 1)
                throw ValidationError("expected one alignment per file for utterance '" + e.utterance_id + "'");
            pv.labels = std::move(per_file.front());
        }
        pv.validate();
        out.push_back(std::move(pv));
    }
    return out;
}

}  // namespace spintok
