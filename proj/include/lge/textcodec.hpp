#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lge/util.hpp"

namespace lge {

// Token id sequence produced by the codec. Encoders consume true length,
// so sequences are never padded.
using TokenIds = std::vector<int>;

// Tokenization rule shared by every encoder in the project: lowercase,
// split on whitespace, strip leading/trailing ASCII punctuation. Tokens
// that are pure punctuation disappear.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const std::string& raw : split_ws(text)) {
        std::size_t b = 0, e = raw.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(raw[e - 1]))) --e;
        if (e > b) out.push_back(lowercase(std::string_view(raw).substr(b, e - b)));
    }
    return out;
}

// Immutable token<->id association. Ids are contiguous from 0 with PAD=0 and
// UNK=1 reserved; non-reserved ids follow first-occurrence order over the
// corpus, so a fixed corpus order always yields the same vocabulary.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    Vocabulary() {
        add_reserved();
    }

    template <typename Corpus>
    static Vocabulary build(const Corpus& corpus) {
        Vocabulary v;
        std::size_t total_tokens = 0;
        bool any_text = false;
        for (const auto& text : corpus) {
            any_text = true;
            for (const std::string& tok : tokenize(text)) {
                ++total_tokens;
                v.intern(tok);
            }
        }
        if (!any_text || total_tokens == 0)
            throw std::invalid_argument("Vocabulary::build: empty corpus");
        return v;
    }

    int id_of(std::string_view token) const {
        auto it = token_to_id_.find(std::string(token));
        return it == token_to_id_.end() ? kUnk : it->second;
    }

    bool contains(std::string_view token) const {
        return token_to_id_.count(std::string(token)) != 0;
    }

    const std::string& token_of(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
            throw std::out_of_range("Vocabulary::token_of: id out of range");
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return tokens_.size(); }

    // Line-oriented serialization: "<token>\t<id>".
    void save(std::ostream& os) const {
        for (std::size_t i = 0; i < tokens_.size(); ++i)
            os << tokens_[i] << '\t' << i << '\n';
    }

    void save_file(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("Vocabulary::save_file: cannot open " + path);
        save(os);
    }

    static Vocabulary load(std::istream& is) {
        Vocabulary v;
        v.tokens_.clear();
        v.token_to_id_.clear();
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos)
                throw std::runtime_error("Vocabulary::load: malformed line: " + line);
            std::string tok = line.substr(0, tab);
            int id = std::stoi(line.substr(tab + 1));
            if (id != static_cast<int>(v.tokens_.size()))
                throw std::runtime_error("Vocabulary::load: non-contiguous id for token " + tok);
            v.tokens_.push_back(tok);
            v.token_to_id_[tok] = id;
        }
        if (v.tokens_.size() < 2 || v.tokens_[0] != "<pad>" || v.tokens_[1] != "<unk>")
            throw std::runtime_error("Vocabulary::load: reserved tokens missing");
        return v;
    }

    static Vocabulary load_file(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw std::runtime_error("Vocabulary::load_file: cannot open " + path);
        return load(is);
    }

private:
    void add_reserved() {
        tokens_ = {"<pad>", "<unk>"};
        token_to_id_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
    }

    void intern(const std::string& tok) {
        auto [it, inserted] = token_to_id_.try_emplace(tok, static_cast<int>(tokens_.size()));
        if (inserted) tokens_.push_back(tok);
    }

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> token_to_id_;
};

// Total function: unknown tokens map to UNK, output truncated to max_len.
inline TokenIds encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len == 0) throw std::invalid_argument("encode: max_len must be >= 1");
    TokenIds ids;
    for (const std::string& tok : tokenize(text)) {
        if (ids.size() >= max_len) break;
        ids.push_back(vocab.id_of(tok));
    }
    return ids;
}

inline std::string decode(const TokenIds& ids, const Vocabulary& vocab) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += vocab.token_of(ids[i]);
    }
    return out;
}

}  // namespace lge
