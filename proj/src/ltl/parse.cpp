#include "swarmplan/ltl/parse.hpp"

#include <cctype>
#include <vector>

namespace swarm::ltl {

namespace {

enum class Tok { Ident, True, False, Not, Next, Eventually, Always, Until, And, Or, Implies, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string text;
};

std::vector<Token> lex(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        auto two = s.substr(i, 2);
        if (two == "&&") { out.push_back({Tok::And, i, two}); i += 2; continue; }
        if (two == "||") { out.push_back({Tok::Or, i, two}); i += 2; continue; }
        if (two == "->") { out.push_back({Tok::Implies, i, two}); i += 2; continue; }
        if (two == "<>") { out.push_back({Tok::Eventually, i, two}); i += 2; continue; }
        if (two == "[]") { out.push_back({Tok::Always, i, two}); i += 2; continue; }
        switch (c) {
            case '!': out.push_back({Tok::Not, i, "!"}); ++i; continue;
            case '(': out.push_back({Tok::LParen, i, "("}); ++i; continue;
            case ')': out.push_back({Tok::RParen, i, ")"}); ++i; continue;
            case 'X': out.push_back({Tok::Next, i, "X"}); ++i; continue;
            case 'U': out.push_back({Tok::Until, i, "U"}); ++i; continue;
            default: break;
        }
        if (c == '_' || (c >= 'a' && c <= 'z')) {
            std::size_t j = i + 1;
            while (j < s.size() && (s[j] == '_' || (s[j] >= 'a' && s[j] <= 'z') || (s[j] >= '0' && s[j] <= '9'))) {
                ++j;
            }
            std::string word = s.substr(i, j - i);
            Tok k = Tok::Ident;
            if (word == "true") k = Tok::True;
            if (word == "false") k = Tok::False;
            out.push_back({k, i, word});
            i = j;
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
    out.push_back({Tok::End, s.size(), ""});
    return out;
}

class Parser {
public:
    Parser(std::vector<Token> toks, const std::optional<std::set<std::string>>& declared)
        : toks_(std::move(toks)), declared_(declared) {}

    Formula parse() {
        Formula f = implies();
        if (peek().kind != Tok::End) {
            throw ParseError("unexpected token '" + peek().text + "'", peek().pos);
        }
        return f;
    }

private:
    const Token& peek() const { return toks_[at_]; }
    Token take() { return toks_[at_++]; }

    Formula implies() {
        Formula lhs = disjunction();
        if (peek().kind == Tok::Implies) {
            take();
            return Formula::implies(lhs, implies());
        }
        return lhs;
    }

    Formula disjunction() {
        Formula f = conjunction();
        while (peek().kind == Tok::Or) {
            take();
            f = Formula::disj(f, conjunction());
        }
        return f;
    }

    Formula conjunction() {
        Formula f = until();
        while (peek().kind == Tok::And) {
            take();
            f = Formula::conj(f, until());
        }
        return f;
    }

    Formula until() {
        Formula lhs = unary();
        if (peek().kind == Tok::Until) {
            take();
            return Formula::until(lhs, until());
        }
        return lhs;
    }

    Formula unary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Not: take(); return Formula::negation(unary());
            case Tok::Next: take(); return Formula::next(unary());
            case Tok::Eventually: take(); return Formula::eventually(unary());
            case Tok::Always: take(); return Formula::always(unary());
            case Tok::True: take(); return Formula::truth();
            case Tok::False: take(); return Formula::falsity();
            case Tok::Ident: {
                Token id = take();
                if (declared_ && !declared_->count(id.text)) throw UndeclaredPropositionError(id.text);
                return Formula::atom(id.text);
            }
            case Tok::LParen: {
                Token open = take();
                Formula inner = implies();
                if (peek().kind != Tok::RParen) {
                    if (peek().kind == Tok::End) throw ParseError("unbalanced parenthesis", open.pos);
                    throw ParseError("expected ')' but found '" + peek().text + "'", peek().pos);
                }
                take();
                return inner;
            }
            case Tok::End:
                throw ParseError("unexpected end of input", t.pos);
            default:
                throw ParseError("unexpected token '" + t.text + "'", t.pos);
        }
    }

    std::vector<Token> toks_;
    std::size_t at_ = 0;
    const std::optional<std::set<std::string>>& declared_;
};

}  // namespace

Formula parse_ltl(const std::string& text, const std::optional<std::set<std::string>>& declared) {
    bool blank = true;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) throw ParseError("empty formula", 0);
    Parser p(lex(text), declared);
    return p.parse();
}

}  // namespace swarm::ltl
