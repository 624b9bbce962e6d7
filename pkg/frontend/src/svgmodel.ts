/**
 * In-memory model of the SVG subset served by the figforge service, with a
 * strict parser and a canonical serializer.
 *
 * The number format, attribute ordering, indentation, and escaping rules here
 * reproduce the service's serializer byte for byte: parsing a served document
 * and serializing it again yields the identical string, which is what makes
 * no-op round-trips and undo snapshots exact. Anything outside the subset —
 * unknown elements, unknown attributes, non-uniform transforms, relative path
 * commands — is rejected the same way the service rejects it on save-back,
 * so an export that serializes here never bounces at the server.
 */

export const GROUP = "g";
export const RECT = "rect";
export const CIRCLE = "circle";
export const LINE = "line";
export const PATH = "path";
export const TEXT = "text";
export const IMAGE = "image";

export const KINDS = [GROUP, RECT, CIRCLE, LINE, PATH, TEXT, IMAGE] as const;
export type Kind = (typeof KINDS)[number];

export const XMLNS = "http://www.w3.org/2000/svg";
export const PLACEHOLDER_CLASS = "af-placeholder";
export const COMPONENT_CLASS = "af-component";

const COMMON = ["id", "class", "transform"];

/** Attribute whitelist per element kind. */
export const KIND_ATTRS: Record<Kind, ReadonlySet<string>> = {
  g: new Set([...COMMON, "data-af", "fill", "stroke", "stroke-width"]),
  rect: new Set([...COMMON, "x", "y", "width", "height", "fill", "stroke", "stroke-width"]),
  circle: new Set([...COMMON, "cx", "cy", "r", "fill", "stroke", "stroke-width"]),
  line: new Set([...COMMON, "x1", "y1", "x2", "y2", "stroke", "stroke-width"]),
  path: new Set([...COMMON, "d", "fill", "stroke", "stroke-width"]),
  text: new Set([...COMMON, "x", "y", "font-size", "font-family", "fill"]),
  image: new Set([...COMMON, "x", "y", "width", "height", "href"]),
};

export const SVG_ATTRS: ReadonlySet<string> = new Set(["xmlns", "viewBox", "width", "height"]);

export const NUMERIC_ATTRS: ReadonlySet<string> = new Set([
  "x", "y", "width", "height", "cx", "cy", "r", "x1", "y1", "x2", "y2",
  "stroke-width", "font-size",
]);
export const COLOR_ATTRS: ReadonlySet<string> = new Set(["fill", "stroke"]);

/** The only color keywords the engine understands; everything else must be hex. */
export const COLOR_KEYWORDS: ReadonlySet<string> = new Set([
  "black", "white", "gray", "grey", "red", "green", "blue", "yellow",
  "orange", "purple", "cyan", "magenta",
]);

const HEX6 = /^#[0-9a-f]{6}$/;
const HEX3 = /^#[0-9a-f]{3}$/;

/** Raised when input is not well-formed or uses a bad value. */
export class ParseError extends Error {
  constructor(
    public readonly line: number,
    public readonly col: number,
    reason: string,
  ) {
    super(`parse error at ${line}:${col}: ${reason}`);
    this.name = "ParseError";
  }
}

/** Raised when input is well-formed XML but outside the supported subset. */
export class UnsupportedFeature extends Error {
  constructor(
    detail: string,
    public readonly line: number,
    public readonly col: number,
  ) {
    super(`unsupported at ${line}:${col}: ${detail}`);
    this.name = "UnsupportedFeature";
  }
}

/** Raised by value canonicalizers; the parser converts it to a ParseError. */
export class ValueError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValueError";
  }
}

/**
 * Canonical decimal form: at most 3 decimal places, no trailing zeros.
 *
 * Rounding is half-away-from-zero applied to value*1000, computed on the
 * IEEE double product exactly as the service computes it, so the two sides
 * never disagree over a tie.
 */
export function fmtNum(value: number): string {
  const scaled = Math.abs(value) * 1000.0;
  let i = Math.floor(scaled + 0.5);
  if (value < 0) {
    i = -i;
  }
  if (i === 0) {
    return "0";
  }
  const sign = i < 0 ? "-" : "";
  i = Math.abs(i);
  const whole = Math.floor(i / 1000);
  const frac = i % 1000;
  if (frac === 0) {
    return `${sign}${whole}`;
  }
  const fracS = String(frac).padStart(3, "0").replace(/0+$/, "");
  return `${sign}${whole}.${fracS}`;
}

const NUMBER_RE = /^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$/;

/** Parse a finite decimal number; rejects anything else. */
export function parseNumber(raw: string): number {
  const trimmed = raw.trim();
  if (!NUMBER_RE.test(trimmed)) {
    throw new ValueError(`not a number: '${raw}'`);
  }
  const v = Number(trimmed);
  if (!Number.isFinite(v)) {
    throw new ValueError(`number not finite: '${raw}'`);
  }
  return v;
}

/** Normalize a paint value: lowercase hex (#rgb expanded), 'none', or a plain keyword. */
export function canonColor(raw: string): string {
  const v = raw.trim().toLowerCase();
  if (v === "none" || COLOR_KEYWORDS.has(v)) {
    return v;
  }
  if (HEX6.test(v)) {
    return v;
  }
  if (HEX3.test(v)) {
    return "#" + [...v.slice(1)].map((ch) => ch + ch).join("");
  }
  throw new ValueError(`unsupported color: '${raw}'`);
}

// -- transforms ---------------------------------------------------------------
// An op list is translate/scale entries applied left to right (leftmost
// outermost). Only translate(tx,ty) and uniform scale(s) exist in the subset.

export type TransformOp =
  | ["translate", number, number]
  | ["scale", number];

const TRANSFORM_RE = /\s*([a-zA-Z]+)\s*\(([^)]*)\)/y;

/** Parse a transform attribute into its op list. */
export function parseTransform(text: string): TransformOp[] {
  const ops: TransformOp[] = [];
  let pos = 0;
  while (pos < text.length) {
    TRANSFORM_RE.lastIndex = pos;
    const m = TRANSFORM_RE.exec(text);
    if (!m) {
      if (text.slice(pos).trim()) {
        throw new ValueError(`bad transform syntax at '${text.slice(pos)}'`);
      }
      break;
    }
    const name = m[1]!;
    const argsRaw = m[2]!;
    const args = argsRaw
      .trim()
      .split(/[\s,]+/)
      .filter((a) => a)
      .map((a) => parseNumber(a));
    if (name === "translate") {
      if (args.length === 1) {
        args.push(0.0);
      }
      if (args.length !== 2) {
        throw new ValueError("translate takes 1 or 2 arguments");
      }
      ops.push(["translate", args[0]!, args[1]!]);
    } else if (name === "scale") {
      if (args.length === 2 && args[0] === args[1]) {
        args.pop();
      }
      if (args.length !== 1) {
        throw new ValueError("only uniform scale(s) is supported");
      }
      ops.push(["scale", args[0]!]);
    } else {
      throw new ValueError(`unsupported transform '${name}'`);
    }
    pos = TRANSFORM_RE.lastIndex;
  }
  return ops;
}

/** Serialize an op list back to its canonical attribute spelling. */
export function formatTransform(ops: readonly TransformOp[]): string {
  return ops
    .map((op) =>
      op[0] === "translate"
        ? `translate(${fmtNum(op[1])},${fmtNum(op[2])})`
        : `scale(${fmtNum(op[1])})`,
    )
    .join(" ");
}

// -- path data ----------------------------------------------------------------

const PATH_ARITY: Record<string, number> = { M: 2, L: 2, C: 6, Z: 0 };
const PATH_TOKEN = /[MLCZmlcz]|-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?/g;

export type PathCommand = [string, number[]];

/**
 * Parse path data to explicit absolute commands.
 *
 * Only M/L/C/Z are supported; implicit repetition is expanded (repeated
 * coordinates after M continue as L, per SVG).
 */
export function parsePathD(raw: string): PathCommand[] {
  const tokens = raw.match(PATH_TOKEN) ?? [];
  const residue = raw
    .replace(PATH_TOKEN, "")
    .replace(/\s+/g, "")
    .replace(/,/g, "");
  if (residue) {
    throw new ValueError(`bad path data: '${raw}'`);
  }
  const commands: PathCommand[] = [];
  let i = 0;
  while (i < tokens.length) {
    let cmd = tokens[i]!;
    if (/^[a-zA-Z]$/.test(cmd)) {
      if ("mlcz".includes(cmd)) {
        throw new ValueError(`relative path command '${cmd}' not supported`);
      }
      if (!(cmd in PATH_ARITY)) {
        throw new ValueError(`unsupported path command '${cmd}'`);
      }
      i += 1;
    } else {
      // Implicit repetition of the previous command.
      const last = commands[commands.length - 1];
      if (!last) {
        throw new ValueError("path data must start with a command");
      }
      cmd = last[0] === "M" ? "L" : last[0];
      if (cmd === "Z") {
        throw new ValueError("coordinates after Z");
      }
    }
    const arity = PATH_ARITY[cmd]!;
    const args: number[] = [];
    for (let n = 0; n < arity; n += 1) {
      const tok = tokens[i];
      if (tok === undefined || /^[a-zA-Z]$/.test(tok)) {
        throw new ValueError(`path command ${cmd} expects ${arity} numbers`);
      }
      args.push(parseNumber(tok));
      i += 1;
    }
    commands.push([cmd, args]);
  }
  if (commands.length === 0 || commands[0]![0] !== "M") {
    throw new ValueError("path data must start with M");
  }
  return commands;
}

/** Serialize parsed path commands to the canonical spelling. */
export function formatPathD(commands: readonly PathCommand[]): string {
  const parts: string[] = [];
  for (const [cmd, args] of commands) {
    parts.push(cmd);
    for (const a of args) {
      parts.push(fmtNum(a));
    }
  }
  return parts.join(" ");
}

export function canonPathD(raw: string): string {
  return formatPathD(parsePathD(raw));
}

/** Canonicalize one attribute value for storage. */
export function canonAttr(kind: Kind, name: string, value: string | number): string {
  if (typeof value === "number") {
    if (NUMERIC_ATTRS.has(name)) {
      return fmtNum(value);
    }
    value = String(value);
  }
  if (NUMERIC_ATTRS.has(name)) {
    return fmtNum(parseNumber(value));
  }
  if (COLOR_ATTRS.has(name)) {
    return canonColor(value);
  }
  if (name === "transform") {
    return formatTransform(parseTransform(value));
  }
  if (name === "d") {
    return canonPathD(value);
  }
  return value;
}

// -- document model -----------------------------------------------------------

export interface SvgNode {
  kind: Kind;
  attrs: Record<string, string>;
  children: SvgNode[];
  text: string;
}

export interface SvgDocument {
  /** min-x, min-y, width, height; width and height are always positive. */
  viewBox: [number, number, number, number];
  children: SvgNode[];
  /** Root attributes other than xmlns/viewBox (width and height only). */
  extraAttrs: Record<string, string>;
}

/** Construct a node, canonicalizing values and checking attribute names. */
export function makeNode(
  kind: Kind,
  attrs: Record<string, string | number> = {},
  children: SvgNode[] = [],
  text = "",
): SvgNode {
  if (!KINDS.includes(kind)) {
    throw new ValueError(`unknown element kind '${kind}'`);
  }
  const clean: Record<string, string> = {};
  for (const [name, value] of Object.entries(attrs)) {
    if (!KIND_ATTRS[kind].has(name)) {
      throw new ValueError(`attribute '${name}' not allowed on <${kind}>`);
    }
    clean[name] = canonAttr(kind, name, value);
  }
  return { kind, attrs: clean, children, text };
}

export function makeDocument(
  viewBox: [number, number, number, number],
  children: SvgNode[] = [],
  extraAttrs: Record<string, string> = {},
): SvgDocument {
  if (!(viewBox[2] > 0 && viewBox[3] > 0)) {
    throw new ValueError("view box width and height must be positive");
  }
  return { viewBox, children, extraAttrs };
}

/** Depth-first walk of a subtree, the node itself first. */
export function* walk(node: SvgNode): Generator<SvgNode> {
  yield node;
  for (const child of node.children) {
    yield* walk(child);
  }
}

export function* iterNodes(doc: SvgDocument): Generator<SvgNode> {
  for (const child of doc.children) {
    yield* walk(child);
  }
}

export function findById(doc: SvgDocument, id: string): SvgNode | null {
  for (const node of iterNodes(doc)) {
    if (node.attrs["id"] === id) {
      return node;
    }
  }
  return null;
}

/** A path of child indices from the document root down to a node. */
export type NodePath = number[];

/** The node at a child-index path, or null when the path dangles. */
export function nodeAtPath(doc: SvgDocument, path: NodePath): SvgNode | null {
  let nodes: SvgNode[] = doc.children;
  let node: SvgNode | null = null;
  for (const index of path) {
    const next: SvgNode | undefined = nodes[index];
    if (next === undefined) {
      return null;
    }
    node = next;
    nodes = next.children;
  }
  return node;
}

/** All node paths in document order, each paired with its node. */
export function allPaths(doc: SvgDocument): Array<{ path: NodePath; node: SvgNode }> {
  const out: Array<{ path: NodePath; node: SvgNode }> = [];
  const visit = (nodes: SvgNode[], prefix: NodePath) => {
    nodes.forEach((node, i) => {
      const path = [...prefix, i];
      out.push({ path, node });
      visit(node.children, path);
    });
  };
  visit(doc.children, []);
  return out;
}

const AF_ID = /^AF-(\d+)$/;

/** The k of an AF-<k> id, if this node carries one. */
export function afIdOf(node: SvgNode): number | null {
  const id = node.attrs["id"];
  if (id === undefined) {
    return null;
  }
  const m = AF_ID.exec(id);
  return m ? Number(m[1]) : null;
}

/** True for the `<g class="af-component">` groups that hold injected assets. */
export function isComponentGroup(node: SvgNode): boolean {
  return (
    node.kind === GROUP &&
    afIdOf(node) !== null &&
    node.attrs["class"] === COMPONENT_CLASS
  );
}

export function transformOps(node: SvgNode): TransformOp[] {
  const raw = node.attrs["transform"];
  return raw ? parseTransform(raw) : [];
}

// -- parser -------------------------------------------------------------------

const ATTR_ALIASES: Record<string, string> = { "xlink:href": "href" };
const IGNORED_ATTRS = new Set(["xmlns:xlink"]);

const NAME_RE = /[A-Za-z_:][A-Za-z0-9_.:-]*/y;
const ENTITIES: Record<string, string> = {
  amp: "&",
  lt: "<",
  gt: ">",
  quot: '"',
  apos: "'",
};

class Scanner {
  pos = 0;

  constructor(readonly text: string) {}

  lineCol(at = this.pos): [number, number] {
    let line = 1;
    let last = -1;
    for (let i = 0; i < at && i < this.text.length; i += 1) {
      if (this.text[i] === "\n") {
        line += 1;
        last = i;
      }
    }
    return [line, at - last];
  }

  fail(reason: string, at = this.pos): never {
    const [line, col] = this.lineCol(at);
    throw new ParseError(line, col, reason);
  }

  unsupported(detail: string, at = this.pos): never {
    const [line, col] = this.lineCol(at);
    throw new UnsupportedFeature(detail, line, col);
  }

  eof(): boolean {
    return this.pos >= this.text.length;
  }

  peek(): string {
    return this.text[this.pos] ?? "";
  }

  startsWith(s: string): boolean {
    return this.text.startsWith(s, this.pos);
  }

  skipWhitespace(): void {
    while (!this.eof() && /\s/.test(this.peek())) {
      this.pos += 1;
    }
  }

  /** Skip `<!-- -->` comments and `<?...?>` processing instructions. */
  skipMisc(): boolean {
    if (this.startsWith("<!--")) {
      const end = this.text.indexOf("-->", this.pos + 4);
      if (end < 0) {
        this.fail("unterminated comment");
      }
      this.pos = end + 3;
      return true;
    }
    if (this.startsWith("<?")) {
      const end = this.text.indexOf("?>", this.pos + 2);
      if (end < 0) {
        this.fail("unterminated processing instruction");
      }
      this.pos = end + 2;
      return true;
    }
    if (this.startsWith("<!")) {
      this.fail("doctype and CDATA markup are not supported");
    }
    return false;
  }

  readName(): string {
    NAME_RE.lastIndex = this.pos;
    const m = NAME_RE.exec(this.text);
    if (!m || m.index !== this.pos) {
      this.fail("expected a name");
    }
    this.pos = NAME_RE.lastIndex;
    return m[0];
  }

  decodeEntity(): string {
    const start = this.pos;
    const end = this.text.indexOf(";", start + 1);
    if (end < 0 || end - start > 12) {
      this.fail("bad entity reference", start);
    }
    const body = this.text.slice(start + 1, end);
    this.pos = end + 1;
    if (body.startsWith("#x") || body.startsWith("#X")) {
      const code = Number.parseInt(body.slice(2), 16);
      if (Number.isNaN(code)) {
        this.fail("bad character reference", start);
      }
      return String.fromCodePoint(code);
    }
    if (body.startsWith("#")) {
      const code = Number.parseInt(body.slice(1), 10);
      if (Number.isNaN(code)) {
        this.fail("bad character reference", start);
      }
      return String.fromCodePoint(code);
    }
    const mapped = ENTITIES[body];
    if (mapped === undefined) {
      this.fail(`undefined entity '&${body};'`, start);
    }
    return mapped;
  }

  readAttrValue(): string {
    const quote = this.peek();
    if (quote !== '"' && quote !== "'") {
      this.fail("attribute value must be quoted");
    }
    this.pos += 1;
    let out = "";
    while (!this.eof()) {
      const ch = this.peek();
      if (ch === quote) {
        this.pos += 1;
        return out;
      }
      if (ch === "<") {
        this.fail("'<' not allowed in attribute value");
      }
      if (ch === "&") {
        out += this.decodeEntity();
        continue;
      }
      out += ch;
      this.pos += 1;
    }
    this.fail("unterminated attribute value");
  }

  /** Text content up to the next tag, entities decoded. */
  readText(): string {
    let out = "";
    while (!this.eof()) {
      const ch = this.peek();
      if (ch === "<") {
        return out;
      }
      if (ch === "&") {
        out += this.decodeEntity();
        continue;
      }
      out += ch;
      this.pos += 1;
    }
    return out;
  }
}

interface RawTag {
  name: string;
  attrs: Record<string, string>;
  selfClosing: boolean;
  at: number;
}

function readTag(sc: Scanner): RawTag {
  const at = sc.pos;
  sc.pos += 1; // consume '<'
  const name = sc.readName();
  const attrs: Record<string, string> = {};
  for (;;) {
    sc.skipWhitespace();
    if (sc.eof()) {
      sc.fail("unterminated tag", at);
    }
    if (sc.startsWith("/>")) {
      sc.pos += 2;
      return { name, attrs, selfClosing: true, at };
    }
    if (sc.peek() === ">") {
      sc.pos += 1;
      return { name, attrs, selfClosing: false, at };
    }
    const attrAt = sc.pos;
    const attrName = sc.readName();
    sc.skipWhitespace();
    if (sc.peek() !== "=") {
      sc.fail(`attribute '${attrName}' has no value`, attrAt);
    }
    sc.pos += 1;
    sc.skipWhitespace();
    const value = sc.readAttrValue();
    if (attrName in attrs) {
      sc.fail(`duplicate attribute '${attrName}'`, attrAt);
    }
    attrs[attrName] = value;
  }
}

/**
 * Parse a subset document. Raises ParseError for malformed or bad-valued
 * input and UnsupportedFeature for well-formed input outside the subset.
 */
export function parseSvg(text: string): SvgDocument {
  const sc = new Scanner(text);
  let rootAttrs: Record<string, string> | null = null;
  let rootClosed = false;
  const rootChildren: SvgNode[] = [];
  const stack: SvgNode[] = [];

  const startElement = (tag: RawTag): void => {
    if (rootAttrs === null) {
      if (tag.name !== "svg") {
        sc.fail(`root element must be <svg>, got <${tag.name}>`, tag.at);
      }
      for (const attr of Object.keys(tag.attrs)) {
        if (!SVG_ATTRS.has(attr) && !IGNORED_ATTRS.has(attr)) {
          sc.unsupported(`attribute '${attr}' on <svg>`, tag.at);
        }
      }
      rootAttrs = { ...tag.attrs };
      if (tag.selfClosing) {
        rootClosed = true;
      }
      return;
    }
    if (rootClosed) {
      sc.fail("content after the root element", tag.at);
    }
    if (!(KINDS as readonly string[]).includes(tag.name)) {
      sc.unsupported(`element <${tag.name}>`, tag.at);
    }
    const kind = tag.name as Kind;
    const parent = stack[stack.length - 1];
    if (parent !== undefined && parent.kind !== GROUP) {
      sc.fail(`<${parent.kind}> cannot contain child elements`, tag.at);
    }
    const clean: Record<string, string> = {};
    for (const [rawName, value] of Object.entries(tag.attrs)) {
      const attr = ATTR_ALIASES[rawName] ?? rawName;
      if (IGNORED_ATTRS.has(attr)) {
        continue;
      }
      if (!KIND_ATTRS[kind].has(attr)) {
        sc.unsupported(`attribute '${attr}' on <${kind}>`, tag.at);
      }
      try {
        clean[attr] = canonAttr(kind, attr, value);
      } catch (exc) {
        if (exc instanceof ValueError) {
          sc.fail(`bad value for '${attr}': ${exc.message}`, tag.at);
        }
        throw exc;
      }
    }
    const node: SvgNode = { kind, attrs: clean, children: [], text: "" };
    if (parent === undefined) {
      rootChildren.push(node);
    } else {
      parent.children.push(node);
    }
    if (tag.selfClosing) {
      node.text = node.text.trim();
    } else {
      stack.push(node);
    }
  };

  const endElement = (name: string, at: number): void => {
    if (name === "svg") {
      if (stack.length > 0) {
        sc.fail(`<${stack[stack.length - 1]!.kind}> not closed`, at);
      }
      if (rootAttrs === null || rootClosed) {
        sc.fail("mismatched </svg>", at);
      }
      rootClosed = true;
      return;
    }
    const node = stack.pop();
    if (node === undefined || node.kind !== name) {
      sc.fail(`mismatched closing tag </${name}>`, at);
    } else {
      node.text = node.text.trim();
    }
  };

  const characterData = (data: string, at: number): void => {
    if (rootAttrs === null || rootClosed) {
      if (data.trim()) {
        sc.fail("text outside the root element", at);
      }
      return;
    }
    const node = stack[stack.length - 1];
    if (node === undefined) {
      if (data.trim()) {
        sc.fail("text outside any element", at);
      }
      return;
    }
    if (node.kind !== TEXT) {
      if (data.trim()) {
        sc.fail(`text content not allowed in <${node.kind}>`, at);
      }
      return;
    }
    node.text += data;
  };

  while (!sc.eof()) {
    if (sc.peek() === "<") {
      if (sc.skipMisc()) {
        continue;
      }
      if (sc.startsWith("</")) {
        const at = sc.pos;
        sc.pos += 2;
        const name = sc.readName();
        sc.skipWhitespace();
        if (sc.peek() !== ">") {
          sc.fail("malformed closing tag", at);
        }
        sc.pos += 1;
        endElement(name, at);
        continue;
      }
      const tag = readTag(sc);
      startElement(tag);
      continue;
    }
    const at = sc.pos;
    const data = sc.readText();
    characterData(data, at);
  }

  if (rootAttrs === null) {
    throw new ParseError(1, 1, "no <svg> root element");
  }
  if (!rootClosed || stack.length > 0) {
    throw new ParseError(1, 1, "document ends inside an element");
  }

  const attrs: Record<string, string> = rootAttrs;
  const rawVb = attrs["viewBox"];
  if (rawVb === undefined) {
    throw new ParseError(1, 1, "<svg> missing viewBox");
  }
  const parts = rawVb.replace(/,/g, " ").split(/\s+/).filter((p) => p);
  if (parts.length !== 4) {
    throw new ParseError(1, 1, `viewBox needs 4 numbers, got '${rawVb}'`);
  }
  let viewBox: [number, number, number, number];
  try {
    const nums = parts.map((p) => parseNumber(p));
    viewBox = [nums[0]!, nums[1]!, nums[2]!, nums[3]!];
  } catch (exc) {
    if (exc instanceof ValueError) {
      throw new ParseError(1, 1, `bad viewBox: ${exc.message}`);
    }
    throw exc;
  }
  if (!(viewBox[2] > 0 && viewBox[3] > 0)) {
    throw new ParseError(1, 1, "viewBox width and height must be positive");
  }
  const extra: Record<string, string> = {};
  for (const key of ["width", "height"]) {
    const v = attrs[key];
    if (v !== undefined) {
      extra[key] = v;
    }
  }
  return { viewBox, children: rootChildren, extraAttrs: extra };
}

// -- serializer ---------------------------------------------------------------

function escapeAttr(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function escapeText(value: string): string {
  return value.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function attrString(attrs: Record<string, string>): string {
  return Object.keys(attrs)
    .sort()
    .map((name) => ` ${name}="${escapeAttr(attrs[name]!)}"`)
    .join("");
}

function emit(node: SvgNode, depth: number, out: string[]): void {
  const pad = "  ".repeat(depth);
  const openTag = `${pad}<${node.kind}${attrString(node.attrs)}`;
  if (node.children.length === 0 && !node.text) {
    out.push(openTag + "/>");
    return;
  }
  if (node.text && node.children.length === 0) {
    out.push(`${openTag}>${escapeText(node.text)}</${node.kind}>`);
    return;
  }
  out.push(openTag + ">");
  for (const child of node.children) {
    emit(child, depth + 1, out);
  }
  out.push(`${pad}</${node.kind}>`);
}

export function viewBoxString(doc: SvgDocument): string {
  return doc.viewBox.map((v) => fmtNum(v)).join(" ");
}

/**
 * Canonical serialization: attributes in lexicographic order, 2-space indent,
 * self-closing empty elements, xmlns always on the root, trailing newline.
 * Serializing the same tree twice is byte-identical, and output parses back
 * to an equal tree.
 */
export function serializeSvg(doc: SvgDocument): string {
  const rootAttrs: Record<string, string> = { ...doc.extraAttrs };
  rootAttrs["xmlns"] = XMLNS;
  rootAttrs["viewBox"] = viewBoxString(doc);
  const openTag = `<svg${attrString(rootAttrs)}`;
  if (doc.children.length === 0) {
    return openTag + "/>\n";
  }
  const out = [openTag + ">"];
  for (const child of doc.children) {
    emit(child, 1, out);
  }
  out.push("</svg>");
  return out.join("\n") + "\n";
}

/** Deep structural copy of a node. */
export function cloneNode(node: SvgNode): SvgNode {
  return {
    kind: node.kind,
    attrs: { ...node.attrs },
    children: node.children.map((c) => cloneNode(c)),
    text: node.text,
  };
}
