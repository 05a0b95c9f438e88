// Recursive-descent ES2020 parser (script goal) producing the normalized
// 13-kind tree. Highlights:
//  - regex vs division resolved by parser context: token pulls at operand
//    position allow a regex, operator-position pulls do not;
//  - automatic semicolon insertion at '}'/EOF/newline, with the restricted
//    productions (return/throw/break/continue arguments, postfix ++/--);
//  - arrow functions recognized by bounded backtracking over the parameter
//    list; abandoned attempts cost re-lexing only (nodes live in an arena);
//  - template literals lexed part-by-part around embedded expressions;
//  - recursion depth and a wall-clock deadline bound parsing, and the
//    finished tree's depth is bounded so later recursive walks are safe.

#include "opskb/parser.hpp"

#include <chrono>
#include <deque>
#include <set>

namespace opskb::ast {

namespace {

using Clock = std::chrono::steady_clock;

struct ParseError {
    std::size_t offset;
    std::string message;
};

struct TimeoutError {};

struct PNode {
    NodeKind kind = NodeKind::Other;
    std::string name;
    std::vector<PNode*> children;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
};

struct Token {
    enum class T { eof, ident, num, str, regex, tmpl_full, tmpl_head, punct };
    T type = T::eof;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool nl_before = false;
    std::string_view text;

    bool is_punct(std::string_view p) const { return type == T::punct && text == p; }
    bool is_ident(std::string_view w) const { return type == T::ident && text == w; }
};

bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' ||
           c == '#' || c >= 0x80;
}
bool is_ident_part(unsigned char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

class Lexer {
  public:
    Lexer(std::string_view src, Clock::time_point deadline)
        : src_(src), deadline_(deadline) {
        if (src_.size() >= 2 && src_[0] == '#' && src_[1] == '!') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
        }
    }

    std::size_t pos() const { return pos_; }
    void set_pos(std::size_t p) { pos_ = p; }

    void check_deadline() {
        if ((++budget_ & 0x3F) == 1 && Clock::now() > deadline_) throw TimeoutError{};
    }

    Token next(bool regex_ok) {
        check_deadline();
        bool nl = false;
        skip_trivia(nl);
        Token t;
        t.begin = pos_;
        t.nl_before = nl;
        if (pos_ >= src_.size()) {
            t.type = Token::T::eof;
            t.end = pos_;
            return t;
        }
        unsigned char c = src_[pos_];
        if (is_ident_start(c)) {
            ++pos_;
            while (pos_ < src_.size() && is_ident_part(src_[pos_])) ++pos_;
            t.type = Token::T::ident;
        } else if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            scan_number();
            t.type = Token::T::num;
        } else if (c == '"' || c == '\'') {
            scan_string(c);
            t.type = Token::T::str;
        } else if (c == '`') {
            t.type = scan_template_from_tick() ? Token::T::tmpl_full : Token::T::tmpl_head;
        } else if (c == '/' && regex_ok) {
            scan_regex();
            t.type = Token::T::regex;
        } else {
            scan_punct();
            t.type = Token::T::punct;
        }
        t.end = pos_;
        t.text = src_.substr(t.begin, t.end - t.begin);
        return t;
    }

    struct TmplPart {
        bool tail = false;
        std::size_t end = 0;
    };

    /// Resumes a template literal whose substitution just closed; brace_pos
    /// must point at the '}' token. Scans the next chunk of template text.
    TmplPart template_continue(std::size_t brace_pos) {
        pos_ = brace_pos;
        if (pos_ >= src_.size() || src_[pos_] != '}') {
            throw ParseError{pos_, "expected } to resume template"};
        }
        ++pos_;
        TmplPart part;
        part.tail = scan_template_body();
        part.end = pos_;
        return part;
    }

  private:
    void skip_trivia(bool& nl) {
        while (pos_ < src_.size()) {
            unsigned char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\v' || c == '\f') {
                ++pos_;
            } else if (c == '\n' || c == '\r') {
                nl = true;
                ++pos_;
            } else if (c == 0xE2 && pos_ + 2 < src_.size() && (unsigned char)src_[pos_ + 1] == 0x80 &&
                       ((unsigned char)src_[pos_ + 2] == 0xA8 || (unsigned char)src_[pos_ + 2] == 0xA9)) {
                nl = true;  // U+2028 / U+2029
                pos_ += 3;
            } else if (c == 0xC2 && pos_ + 1 < src_.size() && (unsigned char)src_[pos_ + 1] == 0xA0) {
                pos_ += 2;  // U+00A0 no-break space
            } else if (c == 0xEF && pos_ + 2 < src_.size() && (unsigned char)src_[pos_ + 1] == 0xBB &&
                       (unsigned char)src_[pos_ + 2] == 0xBF) {
                pos_ += 3;  // BOM
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                pos_ += 2;
                while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                std::size_t start = pos_;
                pos_ += 2;
                bool closed = false;
                while (pos_ < src_.size()) {
                    if (src_[pos_] == '\n' || src_[pos_] == '\r') nl = true;
                    if (src_[pos_] == '*' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                        pos_ += 2;
                        closed = true;
                        break;
                    }
                    ++pos_;
                }
                if (!closed) throw ParseError{start, "unterminated block comment"};
            } else {
                break;
            }
        }
    }

    void scan_number() {
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() &&
            (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X' || src_[pos_ + 1] == 'o' ||
             src_[pos_ + 1] == 'O' || src_[pos_ + 1] == 'b' || src_[pos_ + 1] == 'B')) {
            pos_ += 2;
            while (pos_ < src_.size() && (is_ident_part(src_[pos_]) || src_[pos_] == '_')) ++pos_;
            return;
        }
        auto digits = [&] {
            while (pos_ < src_.size() && (is_digit(src_[pos_]) || src_[pos_] == '_')) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && is_digit(src_[pos_])) {
                digits();
            } else {
                pos_ = save;
            }
        }
        if (pos_ < src_.size() && src_[pos_] == 'n') ++pos_;
    }

    void scan_string(char quote) {
        std::size_t start = pos_;
        ++pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                // \r\n line continuation
                if (src_[pos_ - 1] == '\r' && pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
                continue;
            }
            if (c == quote) {
                ++pos_;
                return;
            }
            if (c == '\n' || c == '\r') throw ParseError{start, "unterminated string literal"};
            ++pos_;
        }
        throw ParseError{start, "unterminated string literal"};
    }

    // Returns true when the template has no substitutions (ends at '`').
    bool scan_template_from_tick() {
        ++pos_;  // consume '`'
        return scan_template_body();
    }

    bool scan_template_body() {
        std::size_t start = pos_;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (c == '`') {
                ++pos_;
                return true;
            }
            if (c == '$' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '{') {
                pos_ += 2;
                return false;
            }
            ++pos_;
        }
        throw ParseError{start, "unterminated template literal"};
    }

    void scan_regex() {
        std::size_t start = pos_;
        ++pos_;  // consume '/'
        bool in_class = false;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (c == '\n' || c == '\r') throw ParseError{start, "unterminated regular expression"};
            if (c == '[') in_class = true;
            else if (c == ']') in_class = false;
            else if (c == '/' && !in_class) {
                ++pos_;
                while (pos_ < src_.size() && is_ident_part(src_[pos_])) ++pos_;
                return;
            }
            ++pos_;
        }
        throw ParseError{start, "unterminated regular expression"};
    }

    void scan_punct() {
        static const std::string_view multi[] = {
            ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=",
            "=>",   "==",  "!=",  "<=",  ">=",  "&&",  "||",  "??",  "++",  "--",  "+=",
            "-=",   "*=",  "/=",  "%=",  "&=",  "|=",  "^=",  "<<",  ">>",  "**"};
        std::string_view rest = src_.substr(pos_);
        for (auto p : multi) {
            if (rest.substr(0, p.size()) == p) {
                pos_ += p.size();
                return;
            }
        }
        if (rest.size() >= 2 && rest[0] == '?' && rest[1] == '.' &&
            (rest.size() < 3 || !is_digit(rest[2]))) {
            pos_ += 2;
            return;
        }
        static const std::string_view singles = "{}()[];,<>+-*/%&|^!~?:=.";
        if (singles.find(rest[0]) != std::string_view::npos) {
            ++pos_;
            return;
        }
        throw ParseError{pos_, "unexpected character"};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Clock::time_point deadline_;
    unsigned budget_ = 0;
};

const std::set<std::string_view>& reserved_words() {
    static const std::set<std::string_view> words = {
        "break",  "case",   "catch",      "class", "const",  "continue", "debugger",
        "default", "delete", "do",        "else",  "export", "extends",  "finally",
        "for",    "function", "if",       "import", "in",    "instanceof", "new",
        "return", "super",  "switch",     "this",  "throw",  "try",      "typeof",
        "var",    "void",   "while",      "with"};
    return words;
}

class Parser {
  public:
    Parser(std::string_view src, Clock::time_point deadline, int max_depth)
        : src_(src), lex_(src, deadline), max_depth_(max_depth) {}

    PNode* parse_program() {
        PNode* prog = alloc(NodeKind::Program, 0);
        for (;;) {
            const Token& t = peek_val();
            if (t.type == Token::T::eof) break;
            prog->children.push_back(parse_statement());
        }
        prog->end = static_cast<std::uint32_t>(src_.size());
        return prog;
    }

  private:
    // ---- infrastructure ----

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            // Check, then increment: if this throws the destructor never
            // runs, and a caught trial parse must leave the count balanced.
            if (p.depth_ >= p.max_depth_) {
                throw ParseError{p.last_end_, "nesting too deep"};
            }
            ++p.depth_;
        }
        ~DepthGuard() { --p.depth_; }
    };

    struct Mark {
        std::size_t lex_pos;
        Token cur;
        bool has_cur;
        bool cur_val;
        std::size_t last_end;
    };

    Mark mark() { return {lex_.pos(), cur_, has_cur_, cur_val_, last_end_}; }
    void restore(const Mark& m) {
        lex_.set_pos(m.lex_pos);
        cur_ = m.cur;
        has_cur_ = m.has_cur;
        cur_val_ = m.cur_val;
        last_end_ = m.last_end;
    }

    PNode* alloc(NodeKind kind, std::size_t begin, std::string name = "") {
        arena_.emplace_back();
        PNode* n = &arena_.back();
        n->kind = kind;
        n->name = std::move(name);
        n->begin = static_cast<std::uint32_t>(begin);
        n->end = n->begin;
        return n;
    }
    PNode* finish(PNode* n) {
        n->end = static_cast<std::uint32_t>(last_end_);
        return n;
    }

    const Token& peek(bool val) {
        lex_.check_deadline();
        if (has_cur_) {
            if (cur_val_ != val && !cur_.text.empty() && cur_.text[0] == '/') {
                bool nl = cur_.nl_before;
                lex_.set_pos(cur_.begin);
                cur_ = lex_.next(val);
                cur_.nl_before = nl;
            }
            cur_val_ = val;
            return cur_;
        }
        cur_ = lex_.next(val);
        cur_val_ = val;
        has_cur_ = true;
        return cur_;
    }
    const Token& peek_val() { return peek(true); }
    const Token& peek_op() { return peek(false); }

    Token take(bool val) {
        peek(val);
        has_cur_ = false;
        last_end_ = cur_.end;
        return cur_;
    }
    Token take_val() { return take(true); }
    Token take_op() { return take(false); }

    void invalidate() { has_cur_ = false; }

    [[noreturn]] void err(std::size_t offset, std::string msg) {
        throw ParseError{offset, std::move(msg)};
    }

    Token expect_punct(std::string_view p) {
        const Token& t = peek_op();
        if (!t.is_punct(p)) err(t.begin, "expected '" + std::string(p) + "'");
        return take_op();
    }

    void expect_semicolon() {
        const Token& t = peek_op();
        if (t.is_punct(";")) {
            take_op();
            return;
        }
        if (t.type == Token::T::eof || t.is_punct("}") || t.nl_before) return;  // ASI
        err(t.begin, "expected ';'");
    }

    bool is_reserved(std::string_view w) const { return reserved_words().count(w) > 0; }

    // ---- statements ----

    PNode* parse_statement() {
        DepthGuard guard(*this);
        const Token& t = peek_val();
        std::size_t b = t.begin;
        if (t.type == Token::T::punct) {
            if (t.text == "{") return parse_block();
            if (t.text == ";") {
                take_op();
                return finish(alloc(NodeKind::Other, b, "EmptyStatement"));
            }
        }
        if (t.type == Token::T::ident) {
            std::string_view w = t.text;
            if (w == "var" || w == "const") return parse_var_statement();
            if (w == "let") {
                Mark m = mark();
                take_val();
                const Token& t2 = peek_val();
                bool is_decl = t2.type == Token::T::ident ? !is_reserved(t2.text)
                                                          : t2.is_punct("[") || t2.is_punct("{");
                restore(m);
                if (is_decl) return parse_var_statement();
                // falls through: 'let' used as a plain identifier
            }
            if (w == "function") return parse_function(true, false);
            if (w == "async") {
                Mark m = mark();
                Token a = take_val();
                const Token& t2 = peek_val();
                if (t2.is_ident("function") && !t2.nl_before) {
                    take_val();
                    PNode* fn = parse_function_tail(a.begin, true);
                    return fn;
                }
                restore(m);
            }
            if (w == "class") return parse_class(true);
            if (w == "if") return parse_if();
            if (w == "for") return parse_for();
            if (w == "while") return parse_while();
            if (w == "do") return parse_do_while();
            if (w == "switch") return parse_switch();
            if (w == "try") return parse_try();
            if (w == "return") return parse_return();
            if (w == "throw") return parse_throw();
            if (w == "break" || w == "continue") return parse_break_continue();
            if (w == "debugger") {
                take_val();
                expect_semicolon();
                return finish(alloc(NodeKind::Other, b, "DebuggerStatement"));
            }
            if (w == "with") return parse_with();
            if (w == "import") {
                Mark m = mark();
                take_val();
                const Token& t2 = peek_op();
                bool dynamic = t2.is_punct("(") || t2.is_punct(".");
                restore(m);
                if (!dynamic) return parse_import_declaration();
            }
            if (w == "export") return parse_export_declaration();
            // labeled statement: Identifier ':'
            if (!is_reserved(w)) {
                Mark m = mark();
                Token name = take_val();
                if (peek_op().is_punct(":")) {
                    take_op();
                    PNode* node = alloc(NodeKind::Other, b, "LabeledStatement");
                    node->children.push_back(parse_statement());
                    return finish(node);
                }
                restore(m);
                (void)name;
            }
        }
        PNode* node = alloc(NodeKind::ExpressionStatement, b);
        node->children.push_back(parse_expression(false));
        expect_semicolon();
        return finish(node);
    }

    PNode* parse_block() {
        Token open = expect_punct("{");
        PNode* blk = alloc(NodeKind::BlockStatement, open.begin);
        while (!peek_val().is_punct("}")) {
            if (peek_val().type == Token::T::eof) err(open.begin, "unterminated block");
            blk->children.push_back(parse_statement());
        }
        take_op();
        return finish(blk);
    }

    /// Parses a statement and guarantees a BlockStatement result, wrapping
    /// single statements in a synthetic block so statement level is uniform.
    PNode* parse_body_block() {
        if (peek_val().is_punct("{")) return parse_block();
        PNode* stmt = parse_statement();
        PNode* blk = alloc(NodeKind::BlockStatement, stmt->begin);
        blk->children.push_back(stmt);
        blk->end = stmt->end;
        return blk;
    }

    PNode* parse_var_statement() {
        PNode* decl = parse_var_decl(false);
        expect_semicolon();
        return finish(decl);
    }

    // Parses "var|let|const declarator (, declarator)*" without the
    // terminating semicolon (shared with for-headers).
    PNode* parse_var_decl(bool no_in) {
        Token kw = take_val();
        PNode* decl = alloc(NodeKind::VariableDeclaration, kw.begin, std::string(kw.text));
        for (;;) {
            PNode* target = parse_binding_target();
            PNode* d = alloc(NodeKind::Other, target->begin, "VariableDeclarator");
            d->children.push_back(target);
            if (peek_op().is_punct("=")) {
                take_op();
                d->children.push_back(parse_assignment(no_in));
            }
            finish(d);
            decl->children.push_back(d);
            if (!peek_op().is_punct(",")) break;
            take_op();
        }
        return finish(decl);
    }

    PNode* parse_binding_target() {
        const Token& t = peek_val();
        if (t.type == Token::T::ident) {
            if (is_reserved(t.text)) err(t.begin, "reserved word in binding position");
            Token name = take_val();
            return finish(alloc(NodeKind::Identifier, name.begin, std::string(name.text)));
        }
        if (t.is_punct("[")) {
            Token open = take_val();
            PNode* pat = alloc(NodeKind::Other, open.begin, "ArrayPattern");
            while (!peek_val().is_punct("]")) {
                if (peek_val().is_punct(",")) {
                    take_op();  // elision
                    continue;
                }
                if (peek_val().is_punct("...")) {
                    Token dots = take_op();
                    PNode* rest = alloc(NodeKind::Other, dots.begin, "RestElement");
                    rest->children.push_back(parse_binding_target());
                    pat->children.push_back(finish(rest));
                } else {
                    pat->children.push_back(parse_binding_element());
                }
                if (peek_op().is_punct(",")) take_op();
            }
            take_op();
            return finish(pat);
        }
        if (t.is_punct("{")) {
            Token open = take_val();
            PNode* pat = alloc(NodeKind::Other, open.begin, "ObjectPattern");
            while (!peek_val().is_punct("}")) {
                if (peek_val().is_punct("...")) {
                    Token dots = take_op();
                    PNode* rest = alloc(NodeKind::Other, dots.begin, "RestElement");
                    rest->children.push_back(parse_binding_target());
                    pat->children.push_back(finish(rest));
                } else if (peek_val().is_punct("[")) {
                    Token open_key = take_op();
                    PNode* prop = alloc(NodeKind::Other, open_key.begin, "PropertyComputed");
                    prop->children.push_back(parse_assignment(false));
                    expect_punct("]");
                    expect_punct(":");
                    prop->children.push_back(parse_binding_element());
                    pat->children.push_back(finish(prop));
                } else {
                    const Token& key = peek_val();
                    if (key.type != Token::T::ident && key.type != Token::T::str &&
                        key.type != Token::T::num) {
                        err(key.begin, "expected property name in pattern");
                    }
                    Token key_tok = take_val();
                    if (peek_op().is_punct(":")) {
                        take_op();
                        pat->children.push_back(parse_binding_element());
                    } else {
                        // shorthand binder, optionally with default
                        PNode* binder =
                            alloc(NodeKind::Identifier, key_tok.begin, std::string(key_tok.text));
                        binder->end = static_cast<std::uint32_t>(key_tok.end);
                        if (peek_op().is_punct("=")) {
                            take_op();
                            PNode* def = alloc(NodeKind::Other, key_tok.begin, "AssignmentPattern");
                            def->children.push_back(binder);
                            def->children.push_back(parse_assignment(false));
                            pat->children.push_back(finish(def));
                        } else {
                            pat->children.push_back(binder);
                        }
                    }
                }
                if (peek_op().is_punct(",")) take_op();
            }
            take_op();
            return finish(pat);
        }
        err(t.begin, "expected binding target");
    }

    PNode* parse_binding_element() {
        PNode* target = parse_binding_target();
        if (peek_op().is_punct("=")) {
            take_op();
            PNode* def = alloc(NodeKind::Other, target->begin, "AssignmentPattern");
            def->children.push_back(target);
            def->children.push_back(parse_assignment(false));
            return finish(def);
        }
        return target;
    }

    PNode* parse_if() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::IfStatement, kw.begin);
        expect_punct("(");
        node->children.push_back(parse_expression(false));
        expect_punct(")");
        node->children.push_back(parse_body_block());
        if (peek_val().is_ident("else")) {
            take_val();
            node->children.push_back(parse_body_block());
        }
        return finish(node);
    }

    PNode* parse_while() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::WhileStatement, kw.begin);
        expect_punct("(");
        node->children.push_back(parse_expression(false));
        expect_punct(")");
        node->children.push_back(parse_body_block());
        return finish(node);
    }

    PNode* parse_do_while() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "DoWhileStatement");
        node->children.push_back(parse_body_block());
        if (!peek_val().is_ident("while")) err(peek_val().begin, "expected 'while'");
        take_val();
        expect_punct("(");
        node->children.push_back(parse_expression(false));
        expect_punct(")");
        if (peek_op().is_punct(";")) take_op();
        return finish(node);
    }

    PNode* parse_for() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::ForStatement, kw.begin);
        expect_punct("(");
        PNode* left = nullptr;
        const Token& t = peek_val();
        if (t.is_punct(";")) {
            // no init
        } else if (t.is_ident("var") || t.is_ident("const") ||
                   (t.is_ident("let") && [&] {
                       Mark m = mark();
                       take_val();
                       const Token& t2 = peek_val();
                       bool d = t2.type == Token::T::ident ? !is_reserved(t2.text)
                                                           : t2.is_punct("[") || t2.is_punct("{");
                       restore(m);
                       return d;
                   }())) {
            left = parse_var_decl(true);
        } else {
            left = parse_expression(true);
        }
        const Token& sep = peek_op();
        if (sep.type == Token::T::ident && (sep.text == "in" || sep.text == "of") && left) {
            take_op();
            node->children.push_back(left);
            node->children.push_back(parse_assignment(false));
            expect_punct(")");
            node->children.push_back(parse_body_block());
            return finish(node);
        }
        if (left) node->children.push_back(left);
        expect_punct(";");
        if (!peek_val().is_punct(";")) node->children.push_back(parse_expression(false));
        expect_punct(";");
        if (!peek_val().is_punct(")")) node->children.push_back(parse_expression(false));
        expect_punct(")");
        node->children.push_back(parse_body_block());
        return finish(node);
    }

    PNode* parse_return() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::ReturnStatement, kw.begin);
        const Token& t = peek_val();
        if (!t.nl_before && !t.is_punct(";") && !t.is_punct("}") && t.type != Token::T::eof) {
            node->children.push_back(parse_expression(false));
        }
        expect_semicolon();
        return finish(node);
    }

    PNode* parse_throw() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "ThrowStatement");
        const Token& t = peek_val();
        if (t.nl_before) err(t.begin, "newline after 'throw'");
        node->children.push_back(parse_expression(false));
        expect_semicolon();
        return finish(node);
    }

    PNode* parse_break_continue() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin,
                            kw.text == "break" ? "BreakStatement" : "ContinueStatement");
        const Token& t = peek_op();
        if (!t.nl_before && t.type == Token::T::ident && !is_reserved(t.text)) {
            take_op();  // label reference, not a variable use
        }
        expect_semicolon();
        return finish(node);
    }

    PNode* parse_with() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "WithStatement");
        expect_punct("(");
        node->children.push_back(parse_expression(false));
        expect_punct(")");
        node->children.push_back(parse_body_block());
        return finish(node);
    }

    // Module syntax is tolerated in the script goal: the statement parses
    // and maps to Other, with any nested declaration kept as a child.
    void parse_module_binding_list() {
        take_op();  // '{'
        while (!peek_val().is_punct("}")) {
            Token name = take_val();
            if (name.type != Token::T::ident) err(name.begin, "expected a name");
            if (peek_val().is_ident("as")) {
                take_val();
                Token local = take_val();
                if (local.type != Token::T::ident) err(local.begin, "expected a name");
            }
            if (peek_op().is_punct(",")) {
                take_op();
            } else {
                break;
            }
        }
        expect_punct("}");
    }

    void expect_module_source() {
        Token from = take_val();
        if (!from.is_ident("from")) err(from.begin, "expected 'from'");
        Token mod = take_val();
        if (mod.type != Token::T::str) err(mod.begin, "expected a module string");
    }

    PNode* parse_import_declaration() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "ImportDeclaration");
        const Token& t = peek_val();
        if (t.type == Token::T::str) {
            take_val();
            expect_semicolon();
            return finish(node);
        }
        bool want_more = false;
        if (t.type == Token::T::ident && !is_reserved(t.text)) {
            take_val();  // default binding
            if (peek_op().is_punct(",")) {
                take_op();
                want_more = true;
            }
        } else {
            want_more = true;
        }
        if (want_more) {
            const Token& u = peek_val();
            if (u.is_punct("*")) {
                take_op();
                Token as = take_val();
                if (!as.is_ident("as")) err(as.begin, "expected 'as'");
                Token name = take_val();
                if (name.type != Token::T::ident || is_reserved(name.text)) {
                    err(name.begin, "expected a namespace binding");
                }
            } else if (u.is_punct("{")) {
                parse_module_binding_list();
            } else {
                err(u.begin, "expected import bindings");
            }
        }
        expect_module_source();
        expect_semicolon();
        return finish(node);
    }

    PNode* parse_export_declaration() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "ExportDeclaration");
        const Token& t = peek_val();
        if (t.is_ident("default")) {
            take_val();
            node->children.push_back(parse_assignment(false));
            expect_semicolon();
            return finish(node);
        }
        if (t.is_punct("*")) {
            take_op();
            if (peek_val().is_ident("as")) {
                take_val();
                Token name = take_val();
                if (name.type != Token::T::ident) err(name.begin, "expected a name");
            }
            expect_module_source();
            expect_semicolon();
            return finish(node);
        }
        if (t.is_punct("{")) {
            parse_module_binding_list();
            if (peek_val().is_ident("from")) {
                Token mod = (take_val(), take_val());
                if (mod.type != Token::T::str) err(mod.begin, "expected a module string");
            }
            expect_semicolon();
            return finish(node);
        }
        if (t.is_ident("var") || t.is_ident("let") || t.is_ident("const") ||
            t.is_ident("function") || t.is_ident("class") || t.is_ident("async")) {
            node->children.push_back(parse_statement());
            return finish(node);
        }
        err(t.begin, "expected an export clause");
    }

    PNode* parse_switch() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "SwitchStatement");
        expect_punct("(");
        node->children.push_back(parse_expression(false));
        expect_punct(")");
        expect_punct("{");
        while (!peek_val().is_punct("}")) {
            const Token& t = peek_val();
            std::size_t cb = t.begin;
            PNode* c = alloc(NodeKind::Other, cb, "SwitchCase");
            if (t.is_ident("case")) {
                take_val();
                c->children.push_back(parse_expression(false));
            } else if (t.is_ident("default")) {
                take_val();
            } else {
                err(t.begin, "expected 'case' or 'default'");
            }
            expect_punct(":");
            PNode* body = alloc(NodeKind::BlockStatement, last_end_);
            while (true) {
                const Token& n = peek_val();
                if (n.is_punct("}") || n.is_ident("case") || n.is_ident("default") ||
                    n.type == Token::T::eof) {
                    break;
                }
                body->children.push_back(parse_statement());
            }
            if (!body->children.empty()) body->begin = body->children.front()->begin;
            c->children.push_back(finish(body));
            node->children.push_back(finish(c));
        }
        take_op();
        return finish(node);
    }

    PNode* parse_try() {
        Token kw = take_val();
        PNode* node = alloc(NodeKind::Other, kw.begin, "TryStatement");
        node->children.push_back(parse_block());
        if (peek_val().is_ident("catch")) {
            Token c = take_val();
            PNode* clause = alloc(NodeKind::Other, c.begin, "CatchClause");
            if (peek_op().is_punct("(")) {
                take_op();
                clause->children.push_back(parse_binding_target());
                expect_punct(")");
            }
            clause->children.push_back(parse_block());
            node->children.push_back(finish(clause));
        }
        if (peek_val().is_ident("finally")) {
            take_val();
            node->children.push_back(parse_block());
        }
        if (node->children.size() == 1) err(kw.begin, "try without catch or finally");
        return finish(node);
    }

    PNode* parse_function(bool, bool is_async) {
        Token kw = take_val();  // 'function'
        return parse_function_tail(kw.begin, is_async);
    }

    // After the 'function' keyword (generator star, optional name, params,
    // body). Declarations and expressions share this shape.
    PNode* parse_function_tail(std::size_t begin, bool) {
        if (peek_op().is_punct("*")) take_op();
        PNode* fn = alloc(NodeKind::FunctionExpression, begin);
        const Token& t = peek_val();
        if (t.type == Token::T::ident && !is_reserved(t.text)) {
            Token name = take_val();
            fn->name = std::string(name.text);
        }
        parse_params_into(fn);
        fn->children.push_back(parse_block());
        return finish(fn);
    }

    void parse_params_into(PNode* fn) {
        expect_punct("(");
        while (!peek_val().is_punct(")")) {
            if (peek_val().is_punct("...")) {
                Token dots = take_op();
                PNode* rest = alloc(NodeKind::Other, dots.begin, "RestElement");
                rest->children.push_back(parse_binding_target());
                fn->children.push_back(finish(rest));
            } else {
                fn->children.push_back(parse_binding_element());
            }
            if (peek_op().is_punct(",")) take_op();
        }
        take_op();
    }

    PNode* parse_class(bool is_decl) {
        Token kw = take_val();
        PNode* node =
            alloc(NodeKind::Other, kw.begin, is_decl ? "ClassDeclaration" : "ClassExpression");
        const Token& t = peek_val();
        if (t.type == Token::T::ident && !is_reserved(t.text)) {
            Token name = take_val();
            node->name += ':';
            node->name += name.text;
        }
        if (peek_val().is_ident("extends")) {
            take_val();
            node->children.push_back(parse_lhs_expression());
        }
        Token open = expect_punct("{");
        PNode* body = alloc(NodeKind::Other, open.begin, "ClassBody");
        while (!peek_val().is_punct("}")) {
            if (peek_val().is_punct(";")) {
                take_op();
                continue;
            }
            body->children.push_back(parse_class_member());
        }
        take_op();
        node->children.push_back(finish(body));
        return finish(node);
    }

    PNode* parse_class_member() {
        std::size_t b = peek_val().begin;
        // modifiers: static / async / get / set / *
        while (true) {
            const Token& t = peek_val();
            if (t.is_punct("*")) {
                take_op();
                continue;
            }
            if (t.type == Token::T::ident &&
                (t.text == "static" || t.text == "async" || t.text == "get" || t.text == "set")) {
                Mark m = mark();
                take_val();
                const Token& t2 = peek_val();
                bool is_modifier = t2.type == Token::T::ident || t2.type == Token::T::str ||
                                   t2.type == Token::T::num || t2.is_punct("[") || t2.is_punct("*");
                if (is_modifier) continue;
                restore(m);
            }
            break;
        }
        PNode* member = alloc(NodeKind::Other, b, "MethodDefinition");
        PNode* computed_key = nullptr;
        const Token& kt = peek_val();
        if (kt.is_punct("[")) {
            take_op();
            computed_key = parse_assignment(false);
            expect_punct("]");
        } else if (kt.type == Token::T::ident || kt.type == Token::T::str ||
                   kt.type == Token::T::num) {
            take_val();
        } else {
            err(kt.begin, "expected class member name");
        }
        if (computed_key) member->children.push_back(computed_key);
        if (peek_op().is_punct("(")) {
            PNode* fn = alloc(NodeKind::FunctionExpression, b);
            parse_params_into(fn);
            fn->children.push_back(parse_block());
            member->children.push_back(finish(fn));
        } else {
            member->name = "PropertyDefinition";
            if (peek_op().is_punct("=")) {
                take_op();
                member->children.push_back(parse_assignment(false));
            }
            expect_semicolon();
        }
        return finish(member);
    }

    // ---- expressions ----

    PNode* parse_expression(bool no_in) {
        PNode* first = parse_assignment(no_in);
        if (!peek_op().is_punct(",")) return first;
        PNode* seq = alloc(NodeKind::Other, first->begin, "SequenceExpression");
        seq->children.push_back(first);
        while (peek_op().is_punct(",")) {
            take_op();
            seq->children.push_back(parse_assignment(no_in));
        }
        return finish(seq);
    }

    PNode* parse_assignment(bool no_in) {
        DepthGuard guard(*this);
        const Token& t = peek_val();

        // arrow shorthand: Identifier => ...
        if (t.type == Token::T::ident && !is_reserved(t.text) && t.text != "async" &&
            t.text != "yield") {
            Mark m = mark();
            Token name = take_val();
            const Token& t2 = peek_op();
            if (t2.is_punct("=>") && !t2.nl_before) {
                PNode* param = alloc(NodeKind::Identifier, name.begin, std::string(name.text));
                param->end = static_cast<std::uint32_t>(name.end);
                return parse_arrow_tail(name.begin, {param});
            }
            restore(m);
        }
        if (t.is_ident("async")) {
            Mark m = mark();
            Token async_tok = take_val();
            const Token& t2 = peek_val();
            if (!t2.nl_before && t2.type == Token::T::ident && !is_reserved(t2.text)) {
                Token name = take_val();
                const Token& t3 = peek_op();
                if (t3.is_punct("=>") && !t3.nl_before) {
                    PNode* param = alloc(NodeKind::Identifier, name.begin, std::string(name.text));
                    param->end = static_cast<std::uint32_t>(name.end);
                    return parse_arrow_tail(async_tok.begin, {param});
                }
            } else if (!t2.nl_before && t2.is_punct("(")) {
                std::vector<PNode*> params;
                if (try_parse_arrow_params(params)) {
                    return parse_arrow_tail(async_tok.begin, std::move(params));
                }
            }
            restore(m);
        }
        if (t.is_punct("(")) {
            Mark m = mark();
            std::vector<PNode*> params;
            if (try_parse_arrow_params(params)) {
                return parse_arrow_tail(t.begin, std::move(params));
            }
            restore(m);
        }
        if (t.is_ident("yield")) {
            Mark m = mark();
            Token kw = take_val();
            const Token& t2 = peek_val();
            bool value_follows =
                !t2.nl_before &&
                (t2.type == Token::T::ident || t2.type == Token::T::num ||
                 t2.type == Token::T::str || t2.type == Token::T::regex ||
                 t2.type == Token::T::tmpl_full || t2.type == Token::T::tmpl_head ||
                 t2.is_punct("(") || t2.is_punct("[") || t2.is_punct("{") || t2.is_punct("*"));
            if (value_follows) {
                PNode* node = alloc(NodeKind::Other, kw.begin, "YieldExpression");
                if (peek_op().is_punct("*")) take_op();
                node->children.push_back(parse_assignment(no_in));
                return finish(node);
            }
            restore(m);
        }

        PNode* lhs = parse_conditional(no_in);
        const Token& op = peek_op();
        if (op.type == Token::T::punct &&
            (op.text == "=" || op.text == "+=" || op.text == "-=" || op.text == "*=" ||
             op.text == "/=" || op.text == "%=" || op.text == "**=" || op.text == "<<=" ||
             op.text == ">>=" || op.text == ">>>=" || op.text == "&=" || op.text == "|=" ||
             op.text == "^=" || op.text == "&&=" || op.text == "||=" || op.text == "?\?=")) {
            take_op();
            PNode* node = alloc(NodeKind::Other, lhs->begin, "AssignmentExpression");
            node->children.push_back(lhs);
            node->children.push_back(parse_assignment(no_in));
            return finish(node);
        }
        return lhs;
    }

    // Attempts '(' params ')' '=>'; on failure the caller's mark is intact.
    bool try_parse_arrow_params(std::vector<PNode*>& params) {
        Mark m = mark();
        try {
            expect_punct("(");
            while (!peek_val().is_punct(")")) {
                if (peek_val().is_punct("...")) {
                    Token dots = take_op();
                    PNode* rest = alloc(NodeKind::Other, dots.begin, "RestElement");
                    rest->children.push_back(parse_binding_target());
                    params.push_back(finish(rest));
                } else {
                    params.push_back(parse_binding_element());
                }
                if (peek_op().is_punct(",")) {
                    take_op();
                } else {
                    break;
                }
            }
            expect_punct(")");
            const Token& arrow = peek_op();
            if (!arrow.is_punct("=>") || arrow.nl_before) {
                restore(m);
                params.clear();
                return false;
            }
            return true;
        } catch (const ParseError&) {
            restore(m);
            params.clear();
            return false;
        }
    }

    PNode* parse_arrow_tail(std::size_t begin, std::vector<PNode*> params) {
        expect_punct("=>");
        PNode* fn = alloc(NodeKind::FunctionExpression, begin);
        for (PNode* p : params) fn->children.push_back(p);
        if (peek_val().is_punct("{")) {
            fn->children.push_back(parse_block());
        } else {
            PNode* expr = parse_assignment(false);
            PNode* ret = alloc(NodeKind::ReturnStatement, expr->begin);
            ret->children.push_back(expr);
            ret->end = expr->end;
            PNode* blk = alloc(NodeKind::BlockStatement, expr->begin);
            blk->children.push_back(ret);
            blk->end = expr->end;
            fn->children.push_back(blk);
        }
        return finish(fn);
    }

    PNode* parse_conditional(bool no_in) {
        PNode* test = parse_binary(2, no_in);
        if (!peek_op().is_punct("?")) return test;
        take_op();
        PNode* node = alloc(NodeKind::Other, test->begin, "ConditionalExpression");
        node->children.push_back(test);
        node->children.push_back(parse_assignment(false));
        expect_punct(":");
        node->children.push_back(parse_assignment(no_in));
        return finish(node);
    }

    int binary_prec(const Token& t, bool no_in) const {
        if (t.type == Token::T::ident) {
            if (t.text == "instanceof") return 8;
            if (t.text == "in") return no_in ? -1 : 8;
            return -1;
        }
        if (t.type != Token::T::punct) return -1;
        std::string_view p = t.text;
        if (p == "??" || p == "||") return 2;
        if (p == "&&") return 3;
        if (p == "|") return 4;
        if (p == "^") return 5;
        if (p == "&") return 6;
        if (p == "==" || p == "!=" || p == "===" || p == "!==") return 7;
        if (p == "<" || p == ">" || p == "<=" || p == ">=") return 8;
        if (p == "<<" || p == ">>" || p == ">>>") return 9;
        if (p == "+" || p == "-") return 10;
        if (p == "*" || p == "/" || p == "%") return 11;
        if (p == "**") return 12;
        return -1;
    }

    PNode* parse_binary(int min_prec, bool no_in) {
        PNode* left = parse_unary(no_in);
        for (;;) {
            const Token& op = peek_op();
            int prec = binary_prec(op, no_in);
            if (prec < min_prec) return left;
            bool logical = op.is_punct("&&") || op.is_punct("||") || op.is_punct("??");
            Token op_tok = take_op();
            // '**' is right-associative; everything else here is left.
            PNode* right = parse_binary(prec == 12 ? prec : prec + 1, no_in);
            PNode* node = alloc(NodeKind::Other, left->begin,
                                logical ? "LogicalExpression" : "BinaryExpression");
            (void)op_tok;
            node->children.push_back(left);
            node->children.push_back(right);
            node->end = right->end;
            left = node;
        }
    }

    PNode* parse_unary(bool no_in) {
        DepthGuard guard(*this);
        const Token& t = peek_val();
        if (t.type == Token::T::punct &&
            (t.text == "+" || t.text == "-" || t.text == "!" || t.text == "~")) {
            Token op = take_val();
            PNode* node = alloc(NodeKind::Other, op.begin, "UnaryExpression");
            node->children.push_back(parse_unary(no_in));
            return finish(node);
        }
        if (t.type == Token::T::punct && (t.text == "++" || t.text == "--")) {
            Token op = take_val();
            PNode* node = alloc(NodeKind::Other, op.begin, "UpdateExpression");
            node->children.push_back(parse_unary(no_in));
            return finish(node);
        }
        if (t.type == Token::T::ident &&
            (t.text == "typeof" || t.text == "void" || t.text == "delete")) {
            Token op = take_val();
            PNode* node = alloc(NodeKind::Other, op.begin, "UnaryExpression");
            node->children.push_back(parse_unary(no_in));
            return finish(node);
        }
        if (t.is_ident("await")) {
            Mark m = mark();
            Token kw = take_val();
            const Token& t2 = peek_val();
            bool value_follows =
                !t2.nl_before &&
                (t2.type == Token::T::ident || t2.type == Token::T::num ||
                 t2.type == Token::T::str || t2.type == Token::T::regex ||
                 t2.type == Token::T::tmpl_full || t2.type == Token::T::tmpl_head ||
                 t2.is_punct("(") || t2.is_punct("[") || t2.is_punct("{") || t2.is_punct("!") ||
                 t2.is_punct("+") || t2.is_punct("-") || t2.is_punct("~"));
            if (value_follows) {
                PNode* node = alloc(NodeKind::Other, kw.begin, "AwaitExpression");
                node->children.push_back(parse_unary(no_in));
                return finish(node);
            }
            restore(m);
        }
        return parse_postfix(no_in);
    }

    PNode* parse_postfix(bool no_in) {
        (void)no_in;
        PNode* expr = parse_lhs_expression();
        const Token& t = peek_op();
        if (!t.nl_before && (t.is_punct("++") || t.is_punct("--"))) {
            take_op();
            PNode* node = alloc(NodeKind::Other, expr->begin, "UpdateExpression");
            node->children.push_back(expr);
            return finish(node);
        }
        return expr;
    }

    PNode* parse_lhs_expression() {
        PNode* expr = peek_val().is_ident("new") ? parse_new_expression() : parse_primary();
        return parse_call_member_tail(expr);
    }

    PNode* parse_new_expression() {
        Token kw = take_val();  // 'new'
        if (peek_op().is_punct(".")) {
            take_op();
            const Token& prop = peek_op();
            if (prop.type != Token::T::ident) err(prop.begin, "expected meta property name");
            take_op();
            return finish(alloc(NodeKind::Other, kw.begin, "NewTarget"));
        }
        PNode* callee = peek_val().is_ident("new") ? parse_new_expression() : parse_primary();
        callee = parse_member_tail_no_call(callee);
        PNode* call = alloc(NodeKind::CallExpression, kw.begin);
        call->children.push_back(callee);
        if (peek_op().is_punct("(")) parse_arguments_into(call);
        return finish(call);
    }

    PNode* parse_member_tail_no_call(PNode* expr) {
        for (;;) {
            const Token& t = peek_op();
            if (t.is_punct(".")) {
                take_op();
                const Token& prop = peek_op();
                if (prop.type != Token::T::ident && prop.type != Token::T::num) {
                    err(prop.begin, "expected property name");
                }
                Token name = take_op();
                PNode* m = alloc(NodeKind::MemberExpression, expr->begin, std::string(name.text));
                m->children.push_back(expr);
                expr = finish(m);
            } else if (t.is_punct("[")) {
                take_op();
                PNode* m = alloc(NodeKind::MemberExpression, expr->begin);
                m->children.push_back(expr);
                m->children.push_back(parse_expression(false));
                expect_punct("]");
                expr = finish(m);
            } else {
                return expr;
            }
        }
    }

    PNode* parse_call_member_tail(PNode* expr) {
        for (;;) {
            const Token& t = peek_op();
            if (t.is_punct(".")) {
                take_op();
                const Token& prop = peek_op();
                if (prop.type != Token::T::ident && prop.type != Token::T::num) {
                    err(prop.begin, "expected property name");
                }
                Token name = take_op();
                PNode* m = alloc(NodeKind::MemberExpression, expr->begin, std::string(name.text));
                m->children.push_back(expr);
                expr = finish(m);
            } else if (t.is_punct("?.")) {
                take_op();
                const Token& n = peek_op();
                if (n.is_punct("(")) {
                    PNode* call = alloc(NodeKind::CallExpression, expr->begin);
                    call->children.push_back(expr);
                    parse_arguments_into(call);
                    expr = finish(call);
                } else if (n.is_punct("[")) {
                    take_op();
                    PNode* m = alloc(NodeKind::MemberExpression, expr->begin);
                    m->children.push_back(expr);
                    m->children.push_back(parse_expression(false));
                    expect_punct("]");
                    expr = finish(m);
                } else if (n.type == Token::T::ident || n.type == Token::T::num) {
                    Token name = take_op();
                    PNode* m =
                        alloc(NodeKind::MemberExpression, expr->begin, std::string(name.text));
                    m->children.push_back(expr);
                    expr = finish(m);
                } else {
                    err(n.begin, "expected property, call, or index after '?.'");
                }
            } else if (t.is_punct("[")) {
                take_op();
                PNode* m = alloc(NodeKind::MemberExpression, expr->begin);
                m->children.push_back(expr);
                m->children.push_back(parse_expression(false));
                expect_punct("]");
                expr = finish(m);
            } else if (t.is_punct("(")) {
                PNode* call = alloc(NodeKind::CallExpression, expr->begin);
                call->children.push_back(expr);
                parse_arguments_into(call);
                expr = finish(call);
            } else if (t.type == Token::T::tmpl_full || t.type == Token::T::tmpl_head) {
                PNode* tag = alloc(NodeKind::Other, expr->begin, "TaggedTemplate");
                tag->children.push_back(expr);
                tag->children.push_back(parse_template_literal());
                expr = finish(tag);
            } else {
                return expr;
            }
        }
    }

    void parse_arguments_into(PNode* call) {
        expect_punct("(");
        while (!peek_val().is_punct(")")) {
            if (peek_val().is_punct("...")) {
                Token dots = take_op();
                PNode* spread = alloc(NodeKind::Other, dots.begin, "SpreadElement");
                spread->children.push_back(parse_assignment(false));
                call->children.push_back(finish(spread));
            } else {
                call->children.push_back(parse_assignment(false));
            }
            if (peek_op().is_punct(",")) {
                take_op();
            } else {
                break;
            }
        }
        expect_punct(")");
    }

    PNode* parse_template_literal() {
        Token t = take_val();
        PNode* node = alloc(NodeKind::Other, t.begin, "TemplateLiteral");
        node->end = static_cast<std::uint32_t>(t.end);
        if (t.type == Token::T::tmpl_full) return node;
        for (;;) {
            node->children.push_back(parse_expression(false));
            const Token& close = peek_op();
            if (!close.is_punct("}")) err(close.begin, "expected } in template literal");
            auto part = lex_.template_continue(close.begin);
            invalidate();
            last_end_ = part.end;
            node->end = static_cast<std::uint32_t>(part.end);
            if (part.tail) break;
        }
        return node;
    }

    PNode* parse_primary() {
        DepthGuard guard(*this);
        const Token& t = peek_val();
        std::size_t b = t.begin;
        switch (t.type) {
            case Token::T::eof:
                err(t.begin, "unexpected end of input");
            case Token::T::num:
            case Token::T::str:
            case Token::T::regex: {
                take_val();
                return finish(alloc(NodeKind::Other, b, "Literal"));
            }
            case Token::T::tmpl_full:
            case Token::T::tmpl_head:
                return parse_template_literal();
            case Token::T::ident: {
                std::string_view w = t.text;
                if (w == "function") return parse_function(false, false);
                if (w == "async") {
                    Mark m = mark();
                    take_val();
                    const Token& t2 = peek_val();
                    if (t2.is_ident("function") && !t2.nl_before) {
                        take_val();
                        return parse_function_tail(b, true);
                    }
                    restore(m);
                }
                if (w == "class") return parse_class(false);
                if (w == "this") {
                    take_val();
                    return finish(alloc(NodeKind::Other, b, "ThisExpression"));
                }
                if (w == "super") {
                    take_val();
                    return finish(alloc(NodeKind::Other, b, "Super"));
                }
                if (w == "null" || w == "true" || w == "false") {
                    take_val();
                    return finish(alloc(NodeKind::Other, b, "Literal"));
                }
                if (is_reserved(w) && w != "import") {
                    err(t.begin, "unexpected keyword '" + std::string(w) + "'");
                }
                Token name = take_val();
                return finish(alloc(NodeKind::Identifier, b, std::string(name.text)));
            }
            case Token::T::punct: {
                if (t.text == "(") {
                    take_val();
                    PNode* inner = parse_expression(false);
                    expect_punct(")");
                    return inner;  // parentheses are transparent
                }
                if (t.text == "[") return parse_array_literal();
                if (t.text == "{") return parse_object_literal();
                err(t.begin, "unexpected token");
            }
        }
        err(t.begin, "unexpected token");
    }

    PNode* parse_array_literal() {
        Token open = take_val();
        PNode* arr = alloc(NodeKind::Other, open.begin, "ArrayExpression");
        while (!peek_val().is_punct("]")) {
            if (peek_val().is_punct(",")) {
                take_op();  // elision
                continue;
            }
            if (peek_val().is_punct("...")) {
                Token dots = take_op();
                PNode* spread = alloc(NodeKind::Other, dots.begin, "SpreadElement");
                spread->children.push_back(parse_assignment(false));
                arr->children.push_back(finish(spread));
            } else {
                arr->children.push_back(parse_assignment(false));
            }
            if (peek_op().is_punct(",")) take_op();
        }
        take_op();
        return finish(arr);
    }

    PNode* parse_object_literal() {
        Token open = take_val();
        PNode* obj = alloc(NodeKind::Other, open.begin, "ObjectExpression");
        while (!peek_val().is_punct("}")) {
            obj->children.push_back(parse_property());
            if (peek_op().is_punct(",")) {
                take_op();
            } else {
                break;
            }
        }
        expect_punct("}");
        return finish(obj);
    }

    PNode* parse_property() {
        const Token& t = peek_val();
        std::size_t b = t.begin;
        if (t.is_punct("...")) {
            take_op();
            PNode* spread = alloc(NodeKind::Other, b, "SpreadElement");
            spread->children.push_back(parse_assignment(false));
            return finish(spread);
        }
        // get / set / async / * prefixes when a property name follows
        bool saw_modifier = false;
        while (true) {
            const Token& m = peek_val();
            if (m.is_punct("*")) {
                take_op();
                saw_modifier = true;
                continue;
            }
            if (m.type == Token::T::ident &&
                (m.text == "get" || m.text == "set" || m.text == "async")) {
                Mark mk = mark();
                take_val();
                const Token& after = peek_val();
                bool name_follows = after.type == Token::T::ident ||
                                    after.type == Token::T::str || after.type == Token::T::num ||
                                    after.is_punct("[") || after.is_punct("*");
                if (name_follows) {
                    saw_modifier = true;
                    continue;
                }
                restore(mk);
            }
            break;
        }

        PNode* computed_key = nullptr;
        std::string key_name;
        const Token& kt = peek_val();
        if (kt.is_punct("[")) {
            take_op();
            computed_key = parse_assignment(false);
            expect_punct("]");
        } else if (kt.type == Token::T::ident || kt.type == Token::T::str ||
                   kt.type == Token::T::num) {
            Token key = take_val();
            key_name = std::string(key.text);
        } else {
            err(kt.begin, "expected property name");
        }

        PNode* prop;
        if (computed_key) {
            prop = alloc(NodeKind::Other, b, "PropertyComputed");
            prop->children.push_back(computed_key);
        } else {
            prop = alloc(NodeKind::Other, b, "Property:" + key_name);
        }

        const Token& nt = peek_op();
        if (nt.is_punct("(")) {
            PNode* fn = alloc(NodeKind::FunctionExpression, b);
            parse_params_into(fn);
            fn->children.push_back(parse_block());
            prop->children.push_back(finish(fn));
            return finish(prop);
        }
        if (nt.is_punct(":")) {
            take_op();
            prop->children.push_back(parse_assignment(false));
            return finish(prop);
        }
        if (saw_modifier) err(nt.begin, "expected method body");
        if (computed_key) err(nt.begin, "expected ':' after computed key");
        // shorthand { a } or destructuring default { a = 1 }
        PNode* value = alloc(NodeKind::Identifier, b, key_name);
        value->end = static_cast<std::uint32_t>(last_end_);
        if (nt.is_punct("=")) {
            take_op();
            PNode* def = alloc(NodeKind::Other, b, "AssignmentPattern");
            def->children.push_back(value);
            def->children.push_back(parse_assignment(false));
            prop->children.push_back(finish(def));
        } else {
            prop->children.push_back(value);
        }
        return finish(prop);
    }

    std::string_view src_;
    Lexer lex_;
    Token cur_;
    bool has_cur_ = false;
    bool cur_val_ = false;
    std::size_t last_end_ = 0;
    int depth_ = 0;
    int max_depth_;
    std::deque<PNode> arena_;
};

void flatten(const PNode* root, SyntaxTree& tree) {
    struct Entry {
        const PNode* n;
        std::int32_t parent;
    };
    std::vector<Entry> stack{{root, -1}};
    while (!stack.empty()) {
        Entry e = stack.back();
        stack.pop_back();
        std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        AstNode node;
        node.id = id;
        node.kind = e.n->kind;
        node.span_begin = e.n->begin;
        node.span_end = e.n->end;
        node.name = e.n->name;
        tree.nodes.push_back(std::move(node));
        if (e.parent >= 0) tree.nodes[static_cast<std::size_t>(e.parent)].children.push_back(id);
        for (auto it = e.n->children.rbegin(); it != e.n->children.rend(); ++it) {
            stack.push_back({*it, id});
        }
    }
}

int tree_depth(const SyntaxTree& tree) {
    std::vector<int> depth(tree.nodes.size(), 0);
    int max_d = 0;
    for (const auto& n : tree.nodes) {
        for (std::int32_t c : n.children) {
            depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(n.id)] + 1;
            if (depth[static_cast<std::size_t>(c)] > max_d) {
                max_d = depth[static_cast<std::size_t>(c)];
            }
        }
    }
    return max_d;
}

std::pair<int, int> line_col(std::string_view src, std::size_t offset) {
    int line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < offset && i < src.size(); ++i) {
        if (src[i] == '\n') {
            ++line;
            line_start = i + 1;
        }
    }
    return {line, static_cast<int>(offset - line_start) + 1};
}

}  // namespace

std::string ParseFailure::reject_reason() const {
    if (timed_out) return "timeout";
    return "syntax:" + std::to_string(line) + ":" + std::to_string(col);
}

ParseResult parse_source(std::string_view source, std::string script_id,
                         const ParseOptions& opts) {
    auto deadline = Clock::now() + opts.timeout;
    try {
        Parser parser(source, deadline, opts.max_depth);
        const PNode* prog = parser.parse_program();
        SyntaxTree tree;
        tree.script_id = std::move(script_id);
        tree.root = 0;
        flatten(prog, tree);
        if (tree_depth(tree) > opts.max_tree_depth) {
            ParseFailure f;
            f.message = "tree too deep";
            f.offset = 0;
            f.line = 1;
            f.col = 1;
            return f;
        }
        return tree;
    } catch (const ParseError& e) {
        ParseFailure f;
        f.message = e.message;
        f.offset = e.offset;
        auto [line, col] = line_col(source, e.offset);
        f.line = line;
        f.col = col;
        return f;
    } catch (const TimeoutError&) {
        ParseFailure f;
        f.message = "parse timeout";
        f.timed_out = true;
        return f;
    }
}

ParseResult parse(corpus::ScriptRecord& record, const ParseOptions& opts) {
    ParseResult result = parse_source(record.text, record.script_id, opts);
    if (std::holds_alternative<SyntaxTree>(result)) {
        record.transition(corpus::Stage::validated);
    } else {
        record.transition(corpus::Stage::rejected,
                          std::get<ParseFailure>(result).reject_reason());
    }
    return result;
}

}  // namespace opskb::ast
