from __future__ import annotations

import itertools

from . import nodes as n
from .errors import SourceSyntaxError, UnsupportedConstruct
from .lexer import TYPE_KEYWORDS, Token, tokenize
from .source import SourceFile, SourceSpan

_ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=")
_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]
_REJECTED_KEYWORDS = {
    "goto": "goto",
    "try": "try/catch",
    "catch": "try/catch",
    "throw": "throw",
    "template": "template",
    "typename": "template",
    "auto": "auto",
    "namespace": "namespace",
    "typedef": "typedef",
    "enum": "enum",
    "union": "union",
    "operator": "operator overloading",
    "virtual": "virtual method",
    "sizeof": "sizeof",
    "do": "do-while loop",
}


def _int_value(text: str) -> int:
    t = text.rstrip("uUlL")
    return int(t, 16) if t[:2] in ("0x", "0X") else int(t, 10)


_ESCAPES = {"n": "\n", "t": "\t", "0": "\0", "\\": "\\", "'": "'", '"': '"', "r": "\r"}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class Parser:
    def __init__(self, source: SourceFile):
        self.source = source
        self.toks: list[Token] = tokenize(source)
        self.pos = 0
        self.prev_end = 0
        self.class_names: set[str] = set()

    # ------------------------------------------------------------ helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
            self.prev_end = t.end
        return t

    def at(self, *texts: str) -> bool:
        return self.tok.is_(*texts)

    def accept(self, *texts: str) -> Token | None:
        if self.at(*texts):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of file"
            raise SourceSyntaxError(self._tspan(self.tok), f"expected '{text}', found '{found}'")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of file"
            raise SourceSyntaxError(self._tspan(self.tok), f"expected identifier, found '{found}'")
        return self.advance()

    def _tspan(self, t: Token) -> SourceSpan:
        return SourceSpan(t.start, t.end, self.source.file_id)

    def span_from(self, start: int) -> SourceSpan:
        return SourceSpan(start, max(self.prev_end, start), self.source.file_id)

    def _reject_keyword(self) -> None:
        t = self.tok
        if t.kind == "keyword" and t.text in _REJECTED_KEYWORDS:
            raise UnsupportedConstruct(self._tspan(t), _REJECTED_KEYWORDS[t.text])

    # ------------------------------------------------------------ unit

    def parse_unit(self) -> n.TranslationUnit:
        items: list[n.Node] = []
        while self.tok.kind != "eof":
            items.append(self.top_level())
        filled: list[n.Node] = []
        last = 0
        fid = self.source.file_id
        for item in items:
            if item.span.start > last:
                filled.append(n.Trivia(SourceSpan(last, item.span.start, fid)))
            filled.append(item)
            last = item.span.end
        if last < len(self.source):
            filled.append(n.Trivia(SourceSpan(last, len(self.source), fid)))
        unit = n.TranslationUnit(SourceSpan(0, len(self.source), fid), filled)
        _renumber(unit)
        return unit

    def top_level(self) -> n.Node:
        t = self.tok
        start = t.start
        if t.kind == "directive":
            self.advance()
            return n.Passthrough(self._tspan(t), t.text)
        if self.at("using"):
            self.advance()
            while not self.at(";"):
                if self.tok.kind == "eof":
                    raise SourceSyntaxError(self._tspan(t), "unterminated using-declaration")
                self.advance()
            self.advance()
            return n.Passthrough(self.span_from(start), self.source.text[start:self.prev_end])
        if self.at(";"):
            self.advance()
            return n.Passthrough(self.span_from(start), ";")
        self._reject_keyword()
        if self.at("struct", "class") and self.peek().kind == "ident":
            if self.peek(2).is_(";"):
                self.advance()
                name = self.advance().text
                self.advance()
                self.class_names.add(name)
                return n.Passthrough(self.span_from(start), self.source.text[start:self.prev_end])
            if self.peek(2).is_("{"):
                return self.class_def()
        return self.function_or_global()

    # ------------------------------------------------------------ types

    def at_type_start(self) -> bool:
        t = self.tok
        if t.kind == "keyword":
            if t.text == "auto":
                raise UnsupportedConstruct(self._tspan(t), "auto")
            return t.text in TYPE_KEYWORDS or t.text in ("const", "static", "inline", "struct", "class")
        if t.kind == "ident":
            if t.text == "size_t":
                return True
            if t.text in self.class_names:
                nxt = self.peek()
                return nxt.kind == "ident" or nxt.is_("*", "&", "const") or (
                    nxt.is_("::") and self.peek(2).kind == "ident" and self.peek(3).is_("(")
                )
        return False

    def type_specifier(self) -> tuple[str, bool, bool]:
        """Parse ``[static] [const] base [const]``; returns (base, const, static)."""
        is_const = False
        is_static = False
        words: list[str] = []
        start_tok = self.tok
        while True:
            t = self.tok
            if t.is_("const"):
                is_const = True
                self.advance()
            elif t.is_("static"):
                is_static = True
                self.advance()
            elif t.is_("inline"):
                self.advance()
            elif t.is_("struct", "class") and not words:
                self.advance()
            elif t.kind == "keyword" and t.text in TYPE_KEYWORDS:
                words.append(self.advance().text)
            elif t.kind == "ident" and not words and (t.text in self.class_names or t.text == "size_t"):
                words.append(self.advance().text)
                if self.at("<"):
                    raise UnsupportedConstruct(self._tspan(self.tok), "template")
            elif t.kind == "ident" and t.text == "std" and not words and self.peek().is_("::"):
                raise UnsupportedConstruct(self._tspan(t), "std library type")
            else:
                break
        if not words:
            if self.tok.is_("auto"):
                raise UnsupportedConstruct(self._tspan(self.tok), "auto")
            raise SourceSyntaxError(self._tspan(start_tok), f"expected type, found '{start_tok.text}'")
        base = " ".join(words)
        base = {
            "long int": "long",
            "long long int": "long long",
            "unsigned int": "unsigned",
            "signed int": "int",
            "signed": "int",
            "short int": "short",
        }.get(base, base)
        return base, is_const, is_static

    def declarator(self, base: str, is_const: bool, allow_unnamed: bool = False):
        ptr = 0
        ref = False
        while True:
            if self.accept("*"):
                ptr += 1
                self.accept("const")
            elif self.at("&"):
                self.advance()
                ref = True
            elif self.at("&&"):
                raise UnsupportedConstruct(self._tspan(self.tok), "rvalue reference")
            else:
                break
        if self.at("("):
            raise UnsupportedConstruct(self._tspan(self.tok), "function pointer or parenthesized declarator")
        if self.tok.kind != "ident":
            if allow_unnamed:
                name_tok = None
            else:
                self.ident()
        else:
            name_tok = self.advance()
        dims = []
        while self.accept("["):
            if self.at("]"):
                dims.append(None)
            else:
                size = self.expression()
                if not isinstance(size, n.Literal) or size.kind != "int":
                    raise UnsupportedConstruct(size.span, "non-constant array bound")
                dims.append(size.value)
            self.expect("]")
        ty = n.TypeRef(base, is_const, ptr, ref, tuple(dims))
        return name_tok, ty

    # ------------------------------------------------------------ classes

    def class_def(self) -> n.ClassDef:
        start = self.tok.start
        self.advance()
        name = self.ident().text
        self.class_names.add(name)
        self.expect("{")
        fields: list[n.Declarator] = []
        methods: list[n.FunctionDef] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise SourceSyntaxError(self.span_from(start), "unterminated class definition")
            if self.at("public", "private", "protected"):
                self.advance()
                self.expect(":")
                continue
            self._reject_keyword()
            if self.tok.kind == "ident" and self.tok.text == name and self.peek().is_("("):
                raise UnsupportedConstruct(self._tspan(self.tok), "constructor")
            if self.at("~"):
                raise UnsupportedConstruct(self._tspan(self.tok), "destructor")
            mstart = self.tok.start
            base, is_const, is_static = self.type_specifier()
            if is_static:
                raise UnsupportedConstruct(self.span_from(mstart), "static member")
            name_tok, ty = self.declarator(base, is_const)
            if self.at("("):
                methods.append(self.function_rest(mstart, ty, name_tok, name))
                continue
            fields.append(self._declarator_node(mstart, name_tok, ty))
            while self.accept(","):
                nt, ty2 = self.declarator(base, is_const)
                fields.append(self._declarator_node(nt.start, nt, ty2))
            self.expect(";")
        self.expect("}")
        self.expect(";")
        return n.ClassDef(self.span_from(start), name, fields, methods)

    def _declarator_node(self, start: int, name_tok: Token, ty: n.TypeRef) -> n.Declarator:
        init = None
        if self.accept("="):
            init = self.initializer()
        elif self.at("(") or self.at("{"):
            raise UnsupportedConstruct(self._tspan(self.tok), "direct initialization")
        return n.Declarator(self.span_from(name_tok.start), name_tok.text, ty, init, self._tspan(name_tok))

    # ------------------------------------------------------------ functions

    def function_or_global(self) -> n.Node:
        start = self.tok.start
        base, is_const, is_static = self.type_specifier()
        # out-of-line method: T Class::name(...)
        if self.tok.kind == "ident" and self.peek().is_("::"):
            cls = self.advance().text
            self.advance()
            name_tok, ty = self.declarator(base, is_const)
            if not self.at("("):
                raise UnsupportedConstruct(self.span_from(start), "static data member definition")
            return self.function_rest(start, ty, name_tok, cls, is_static)
        name_tok, ty = self.declarator(base, is_const)
        if self.at("("):
            return self.function_rest(start, ty, name_tok, None, is_static)
        decls = [self._declarator_node(start, name_tok, ty)]
        while self.accept(","):
            nt, ty2 = self.declarator(base, is_const)
            decls.append(self._declarator_node(nt.start, nt, ty2))
        self.expect(";")
        return n.DeclStmt(self.span_from(start), decls, is_static)

    def function_rest(self, start, ret: n.TypeRef, name_tok: Token, class_name, is_static=False):
        if ret.dims:
            raise SourceSyntaxError(self._tspan(name_tok), "function returning an array")
        if ret.ref:
            raise UnsupportedConstruct(self._tspan(name_tok), "reference return type")
        self.expect("(")
        params: list[n.Param] = []
        if self.at("void") and self.peek().is_(")"):
            self.advance()
        while not self.at(")"):
            pstart = self.tok.start
            if self.at("..."):
                raise UnsupportedConstruct(self._tspan(self.tok), "variadic function")
            pbase, pconst, _ = self.type_specifier()
            pname, pty = self.declarator(pbase, pconst, allow_unnamed=True)
            if pty.dims:
                # array parameters decay to pointers
                pty = n.TypeRef(pty.base, pty.const, pty.ptr + 1, pty.ref, ())
            if self.at("="):
                raise UnsupportedConstruct(self._tspan(self.tok), "default argument")
            params.append(n.Param(self.span_from(pstart), pname.text if pname else "", pty))
            if not self.accept(","):
                break
        self.expect(")")
        is_const_method = bool(self.accept("const"))
        body = None
        if self.at("{"):
            body = self.block()
        else:
            self.expect(";")
        return n.FunctionDef(
            self.span_from(start), name_tok.text, class_name, ret, params, is_const_method, body,
            self._tspan(name_tok), is_static,
        )

    # ------------------------------------------------------------ statements

    def block(self) -> n.Block:
        start = self.expect("{").start
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise SourceSyntaxError(self.span_from(start), "unterminated block")
            stmts.append(self.statement())
        close = self.advance()
        return n.Block(self.span_from(start), stmts, self._tspan(close))

    def statement(self) -> n.Stmt:
        t = self.tok
        start = t.start
        if t.kind == "directive":
            self.advance()
            return n.Directive(self._tspan(t), t.text)
        self._reject_keyword()
        if t.is_("{"):
            return self.block()
        if t.is_(";"):
            self.advance()
            return n.Empty(self._tspan(t))
        if t.is_("if"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.statement()
            else_ = self.statement() if self.accept("else") else None
            return n.If(self.span_from(start), cond, then, else_)
        if t.is_("while"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.statement()
            return n.While(self.span_from(start), cond, body)
        if t.is_("for"):
            self.advance()
            self.expect("(")
            init = None
            if self.at(";"):
                self.advance()
            elif self.at_type_start():
                init = self.declaration()
            else:
                estart = self.tok.start
                e = self.expression()
                self.expect(";")
                init = n.ExprStmt(self.span_from(estart), e)
            cond = None if self.at(";") else self.expression()
            self.expect(";")
            incr = None if self.at(")") else self.expression()
            self.expect(")")
            body = self.statement()
            return n.For(self.span_from(start), init, cond, incr, body)
        if t.is_("switch"):
            self.advance()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            if not self.at("{"):
                raise SourceSyntaxError(self._tspan(self.tok), "switch body must be a block")
            body = self.block()
            return n.Switch(self.span_from(start), cond, body)
        if t.is_("case"):
            self.advance()
            value = self.expression()
            self.expect(":")
            return n.CaseLabel(self.span_from(start), value)
        if t.is_("default"):
            self.advance()
            self.expect(":")
            return n.CaseLabel(self.span_from(start), None)
        if t.is_("break"):
            self.advance()
            self.expect(";")
            return n.Break(self.span_from(start))
        if t.is_("continue"):
            self.advance()
            self.expect(";")
            return n.Continue(self.span_from(start))
        if t.is_("return"):
            self.advance()
            value = None if self.at(";") else self.expression()
            self.expect(";")
            return n.Return(self.span_from(start), value)
        if t.kind == "ident" and self.peek().is_(":") and not self.peek().is_("::"):
            raise UnsupportedConstruct(self._tspan(t), "label")
        if self.at_type_start():
            return self.declaration()
        e = self.expression()
        self.expect(";")
        return n.ExprStmt(self.span_from(start), e)

    def declaration(self) -> n.DeclStmt:
        start = self.tok.start
        base, is_const, is_static = self.type_specifier()
        decls = []
        while True:
            name_tok, ty = self.declarator(base, is_const)
            decls.append(self._declarator_node(name_tok.start, name_tok, ty))
            if not self.accept(","):
                break
        self.expect(";")
        return n.DeclStmt(self.span_from(start), decls, is_static)

    def initializer(self) -> n.Expr:
        if self.at("{"):
            start = self.advance().start
            items = []
            while not self.at("}"):
                items.append(self.initializer())
                if not self.accept(","):
                    break
            self.expect("}")
            return n.InitList(self.span_from(start), items)
        return self.assignment()

    # ------------------------------------------------------------ expressions

    def expression(self) -> n.Expr:
        e = self.assignment()
        if self.at(","):
            raise UnsupportedConstruct(self._tspan(self.tok), "comma operator")
        return e

    def assignment(self) -> n.Expr:
        start = self.tok.start
        if self.at("throw"):
            raise UnsupportedConstruct(self._tspan(self.tok), "throw")
        left = self.conditional()
        if self.at(*_ASSIGN_OPS):
            op = self.advance().text
            value = self.initializer() if self.at("{") else self.assignment()
            return n.Assign(self.span_from(start), op, left, value)
        return left

    def conditional(self) -> n.Expr:
        start = self.tok.start
        cond = self.binary(0)
        if self.accept("?"):
            then = self.assignment()
            self.expect(":")
            else_ = self.assignment()
            return n.Conditional(self.span_from(start), cond, then, else_)
        return cond

    def binary(self, level: int) -> n.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        start = self.tok.start
        left = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.at(*ops):
            op = self.advance().text
            right = self.binary(level + 1)
            left = n.Binary(self.span_from(start), op, left, right)
        return left

    def _at_cast(self) -> bool:
        # "(" type-name [*&]* ")"
        if not self.at("("):
            return False
        k = 1
        t = self.peek(k)
        if t.is_("const"):
            k += 1
            t = self.peek(k)
        is_type = (t.kind == "keyword" and t.text in TYPE_KEYWORDS) or (
            t.kind == "ident" and (t.text in self.class_names or t.text == "size_t")
        )
        if not is_type:
            return False
        k += 1
        while self.peek(k).is_("*", "&", "const") or (
            self.peek(k).kind == "keyword" and self.peek(k).text in TYPE_KEYWORDS
        ):
            k += 1
        return self.peek(k).is_(")")

    def _cast_type(self) -> n.TypeRef:
        base, is_const, _ = self.type_specifier()
        ptr = 0
        ref = False
        while self.at("*", "&"):
            if self.advance().text == "*":
                ptr += 1
            else:
                ref = True
        return n.TypeRef(base, is_const, ptr, ref)

    def unary(self) -> n.Expr:
        start = self.tok.start
        if self.at("-", "+", "!", "~", "&", "*", "++", "--"):
            op = self.advance().text
            operand = self.unary()
            return n.Unary(self.span_from(start), op, operand)
        if self._at_cast():
            self.advance()
            ty = self._cast_type()
            self.expect(")")
            operand = self.unary()
            return n.Cast(self.span_from(start), ty, operand)
        if self.at("new"):
            self.advance()
            base, is_const, _ = self.type_specifier()
            ptr = 0
            while self.accept("*"):
                ptr += 1
            ty = n.TypeRef(base, is_const, ptr)
            args = []
            size = None
            if self.accept("["):
                size = self.expression()
                self.expect("]")
            elif self.accept("("):
                while not self.at(")"):
                    args.append(self.assignment())
                    if not self.accept(","):
                        break
                self.expect(")")
            return n.New(self.span_from(start), ty, args, size)
        if self.at("delete"):
            self.advance()
            is_array = False
            if self.accept("["):
                self.expect("]")
                is_array = True
            operand = self.unary()
            return n.Delete(self.span_from(start), operand, is_array)
        return self.postfix()

    def postfix(self) -> n.Expr:
        start = self.tok.start
        e = self.primary()
        while True:
            if self.at("("):
                if not isinstance(e, (n.Name, n.Member)):
                    raise UnsupportedConstruct(e.span, "call through expression")
                self.advance()
                args = []
                while not self.at(")"):
                    args.append(self.assignment())
                    if not self.accept(","):
                        break
                self.expect(")")
                e = n.Call(self.span_from(start), e, args)
            elif self.accept("["):
                idx = self.expression()
                self.expect("]")
                e = n.Subscript(self.span_from(start), e, idx)
            elif self.at(".", "->"):
                arrow = self.advance().text == "->"
                name = self.ident().text
                e = n.Member(self.span_from(start), e, name, arrow)
            elif self.at("++", "--"):
                op = self.advance().text
                e = n.Postfix(self.span_from(start), op, e)
            else:
                return e

    def primary(self) -> n.Expr:
        t = self.tok
        start = t.start
        if t.kind == "number":
            self.advance()
            text = t.text
            is_float = ("." in text or "e" in text.lower()) and not text.lower().startswith("0x")
            if is_float:
                return n.Literal(self._tspan(t), "float", float(text.rstrip("fFlL")), text)
            return n.Literal(self._tspan(t), "int", _int_value(text), text)
        if t.kind == "string":
            self.advance()
            return n.Literal(self._tspan(t), "string", _unescape(t.text[1:-1]), t.text)
        if t.kind == "char":
            self.advance()
            body = _unescape(t.text[1:-1])
            return n.Literal(self._tspan(t), "char", ord(body[0]) if body else 0, t.text)
        if t.is_("true", "false"):
            self.advance()
            return n.Literal(self._tspan(t), "bool", t.text == "true", t.text)
        if t.is_("nullptr"):
            self.advance()
            return n.Literal(self._tspan(t), "null", None, t.text)
        if t.is_("this"):
            self.advance()
            return n.This(self._tspan(t))
        if t.is_("("):
            self.advance()
            e = self.expression()
            self.expect(")")
            # keep the parenthesized span so text reconstruction stays exact
            e.span = self.span_from(start)
            return e
        if t.is_("["):
            raise UnsupportedConstruct(self._tspan(t), "lambda")
        if t.is_("static_cast"):
            self.advance()
            self.expect("<")
            ty = self._cast_type()
            self.expect(">")
            self.expect("(")
            operand = self.expression()
            self.expect(")")
            return n.Cast(self.span_from(start), ty, operand)
        if t.kind == "keyword" and t.text in TYPE_KEYWORDS and self.peek().is_("("):
            self.advance()
            self.advance()
            operand = self.expression()
            self.expect(")")
            return n.Cast(self.span_from(start), n.TypeRef(t.text), operand)
        if t.kind == "ident":
            self.advance()
            name = t.text
            while self.at("::"):
                self.advance()
                name += "::" + self.ident().text
            if self.at("<") and "::" in name:
                raise UnsupportedConstruct(self._tspan(self.tok), "template")
            return n.Name(self.span_from(start), name)
        if t.is_("::"):
            self.advance()
            nm = self.ident()
            return n.Name(self.span_from(start), nm.text)
        self._reject_keyword()
        found = t.text or "end of file"
        raise SourceSyntaxError(self._tspan(t), f"expected expression, found '{found}'")


def _renumber(unit: n.TranslationUnit) -> None:
    ids = itertools.count(1)
    for node in unit.walk():
        node.nid = next(ids)


def parse_translation_unit(source: SourceFile | str | bytes, name: str = "<input>") -> n.TranslationUnit:
    """Parse a translation unit of the supported subset.

    Raises ``SourceSyntaxError`` on grammar violations and
    ``UnsupportedConstruct`` on constructs outside the subset.
    """
    if not isinstance(source, SourceFile):
        source = SourceFile(source, name)
    unit = Parser(source).parse_unit()
    unit.source = source
    return unit
