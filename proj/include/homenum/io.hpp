#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "homenum/errors.hpp"
#include "homenum/structures.hpp"

namespace homenum {

namespace detail {

// Strips a '#' comment, splits on whitespace.
inline std::vector<std::string> tokenize_line(const std::string& raw) {
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::vector<std::string> toks;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
}

inline int parse_int(const std::string& tok, int line_no, const std::string& what) {
    try {
        size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(line_no, "expected " + what + ", got '" + tok + "'");
    }
}

inline void check_name_token(const std::string& tok, int line_no) {
    if (tok.find(':') != std::string::npos) {
        throw ParseError(line_no, "name '" + tok + "' may not contain ':'");
    }
}

} // namespace detail

// Reads one structure in the line-oriented text format:
//
//   vocab
//   rel E 2
//   structure K3
//   elem a
//   tuple E a b
//   end
//
// '#' starts a comment; blank lines are ignored. Elements must be declared
// before any tuple uses them.
inline Structure parse_structure(std::istream& in) {
    enum class State { ExpectVocab, Rels, Body, Done };
    State state = State::ExpectVocab;

    std::vector<RelationSymbol> symbols;
    std::string name;
    std::vector<std::string> universe;
    std::vector<std::vector<Tuple>> tables;

    // local indices while parsing; Structure re-validates on construction
    std::unordered_map<std::string, int> sym_idx;
    std::unordered_map<std::string, int> elem_idx;

    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto toks = detail::tokenize_line(raw);
        if (toks.empty()) continue;
        const std::string& kw = toks[0];

        switch (state) {
        case State::ExpectVocab:
            if (kw != "vocab" || toks.size() != 1) {
                throw ParseError(line_no, "expected 'vocab'");
            }
            state = State::Rels;
            break;

        case State::Rels:
            if (kw == "rel") {
                if (toks.size() != 3) throw ParseError(line_no, "expected 'rel <name> <arity>'");
                detail::check_name_token(toks[1], line_no);
                int arity = detail::parse_int(toks[2], line_no, "arity");
                if (arity < 1) throw ParseError(line_no, "arity must be >= 1");
                if (!sym_idx.emplace(toks[1], static_cast<int>(symbols.size())).second) {
                    throw ParseError(line_no, "duplicate relation '" + toks[1] + "'");
                }
                symbols.push_back({toks[1], arity});
                tables.emplace_back();
            } else if (kw == "structure") {
                if (toks.size() != 2) throw ParseError(line_no, "expected 'structure <name>'");
                detail::check_name_token(toks[1], line_no);
                name = toks[1];
                state = State::Body;
            } else {
                throw ParseError(line_no, "expected 'rel' or 'structure'");
            }
            break;

        case State::Body:
            if (kw == "elem") {
                if (toks.size() != 2) throw ParseError(line_no, "expected 'elem <id>'");
                detail::check_name_token(toks[1], line_no);
                if (!elem_idx.emplace(toks[1], static_cast<int>(universe.size())).second) {
                    throw ParseError(line_no, "duplicate element '" + toks[1] + "'");
                }
                universe.push_back(toks[1]);
            } else if (kw == "tuple") {
                if (toks.size() < 2) throw ParseError(line_no, "expected 'tuple <rel> <id>...'");
                auto sit = sym_idx.find(toks[1]);
                if (sit == sym_idx.end()) {
                    throw ParseError(line_no, "unknown relation '" + toks[1] + "'");
                }
                int s = sit->second;
                int arity = symbols[static_cast<size_t>(s)].arity;
                if (static_cast<int>(toks.size()) - 2 != arity) {
                    throw ParseError(line_no, "relation '" + toks[1] + "' expects " +
                                                  std::to_string(arity) + " entries");
                }
                Tuple t;
                for (size_t i = 2; i < toks.size(); ++i) {
                    auto eit = elem_idx.find(toks[i]);
                    if (eit == elem_idx.end()) {
                        throw ParseError(line_no, "unknown element '" + toks[i] + "'");
                    }
                    t.push_back(eit->second);
                }
                auto& tab = tables[static_cast<size_t>(s)];
                if (std::find(tab.begin(), tab.end(), t) != tab.end()) {
                    throw ParseError(line_no, "duplicate tuple");
                }
                tab.push_back(std::move(t));
            } else if (kw == "end") {
                if (toks.size() != 1) throw ParseError(line_no, "expected 'end'");
                state = State::Done;
            } else {
                throw ParseError(line_no, "expected 'elem', 'tuple' or 'end'");
            }
            break;

        case State::Done:
            throw ParseError(line_no, "content after 'end'");
        }
    }
    if (state != State::Done) throw ParseError(line_no, "unexpected end of input");

    try {
        return Structure(Vocabulary(std::move(symbols)), std::move(name), std::move(universe),
                         std::move(tables));
    } catch (const DomainError& e) {
        throw ParseError(line_no, e.what());
    }
}

inline Structure parse_structure(const std::string& text) {
    std::istringstream ss(text);
    return parse_structure(ss);
}

// Canonical text form; parse(serialize(A)) reproduces A exactly, including
// universe and table order.
inline std::string serialize_structure(const Structure& A) {
    std::ostringstream out;
    out << "vocab\n";
    for (int s = 0; s < A.vocab().size(); ++s) {
        const auto& sym = A.vocab().symbol(s);
        out << "rel " << sym.name << " " << sym.arity << "\n";
    }
    out << "structure " << A.name() << "\n";
    for (int x = 0; x < A.size(); ++x) out << "elem " << A.element_name(x) << "\n";
    for (int s = 0; s < A.vocab().size(); ++s) {
        const auto& sym = A.vocab().symbol(s);
        for (const Tuple& t : A.table(s)) {
            out << "tuple " << sym.name;
            for (int e : t) out << " " << A.element_name(e);
            out << "\n";
        }
    }
    out << "end\n";
    return out.str();
}

// One homomorphism per line: "a:x b:y c:z" in source universe order.
inline std::string format_hom(const PartialAssignment& f, const Structure& A,
                              const Structure& B) {
    std::ostringstream out;
    bool first = true;
    for (int x = 0; x < A.size(); ++x) {
        if (!f.defined(x)) continue;
        if (!first) out << " ";
        first = false;
        out << A.element_name(x) << ":" << B.element_name(f.at(x));
    }
    return out.str();
}

// Inverse of format_hom for a full or partial map line.
inline PartialAssignment parse_hom_line(const std::string& line, const Structure& A,
                                        const Structure& B) {
    PartialAssignment f(A.size());
    std::istringstream ss(line);
    std::string pair;
    while (ss >> pair) {
        auto colon = pair.find(':');
        if (colon == std::string::npos) throw ParseError(1, "expected '<src>:<dst>'");
        std::string src = pair.substr(0, colon);
        std::string dst = pair.substr(colon + 1);
        auto xi = A.element_index(src);
        if (!xi) throw ParseError(1, "unknown source element '" + src + "'");
        auto vi = B.element_index(dst);
        if (!vi) throw ParseError(1, "unknown target element '" + dst + "'");
        if (f.defined(*xi)) throw ParseError(1, "element '" + src + "' mapped twice");
        f.assign(*xi, *vi);
    }
    return f;
}

} // namespace homenum
