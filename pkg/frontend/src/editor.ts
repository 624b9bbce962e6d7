/**
 * Editing session over a figure document: a small command set, snapshot-based
 * undo/redo, and canonical export.
 *
 * Every command keeps the document inside the served subset and preserves the
 * component invariants the service checks on save-back (a component group
 * keeps its single translate transform and exactly one image child), so any
 * export is accepted by PUT /jobs/{id}/svg. Undo snapshots are canonical
 * serializations, which makes "undo restores the prior bytes" exact rather
 * than approximate.
 */

import {
  COMPONENT_CLASS,
  GROUP,
  IMAGE,
  KIND_ATTRS,
  type NodePath,
  type SvgDocument,
  type SvgNode,
  type TransformOp,
  afIdOf,
  allPaths,
  canonColor,
  cloneNode,
  fmtNum,
  formatTransform,
  isComponentGroup,
  iterNodes,
  nodeAtPath,
  parseNumber,
  parseSvg,
  serializeSvg,
  transformOps,
  walk,
} from "./svgmodel.js";

/** How many undo steps a session retains; older snapshots are dropped. */
export const UNDO_LIMIT = 100;

/** Attributes editable through the set-style command. */
const STYLE_ATTRS = new Set(["fill", "stroke", "stroke-width", "font-size", "font-family"]);
const STYLE_NUMERIC = new Set(["stroke-width", "font-size"]);
const STYLE_COLOR = new Set(["fill", "stroke"]);

/** Smallest width/height a resize may leave on a component image. */
const MIN_RESIZE_DIMENSION = 0.5;

export type Command =
  | { kind: "move"; path: NodePath; dx: number; dy: number }
  | { kind: "resize"; path: NodePath; factor: number }
  | { kind: "set-text"; path: NodePath; text: string }
  | { kind: "set-style"; path: NodePath; name: string; value: string | null }
  | { kind: "delete"; path: NodePath }
  | { kind: "duplicate"; path: NodePath; dx: number; dy: number };

/** Raised when a command is malformed or targets a node it cannot apply to. */
export class CommandError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CommandError";
  }
}

export interface ComponentRef {
  afId: number;
  path: NodePath;
  node: SvgNode;
}

function requireFinite(value: number, what: string): number {
  if (!Number.isFinite(value)) {
    throw new CommandError(`${what} must be a finite number`);
  }
  return value;
}

/** Shift a node by (dx,dy), merging into a leading translate when present. */
function shiftNode(node: SvgNode, dx: number, dy: number): void {
  const ops = transformOps(node);
  const first = ops[0];
  if (first && first[0] === "translate") {
    ops[0] = ["translate", first[1] + dx, first[2] + dy];
  } else {
    ops.unshift(["translate", dx, dy]);
  }
  node.attrs["transform"] = formatTransform(ops);
}

function scaleNumericAttr(node: SvgNode, name: string, factor: number): void {
  const raw = node.attrs[name];
  if (raw !== undefined) {
    node.attrs[name] = fmtNum(parseNumber(raw) * factor);
  }
}

export class EditorSession {
  private doc: SvgDocument;
  private undoStack: string[] = [];
  private redoStack: string[] = [];
  private savedText: string;

  /** Start a session from a serialized document (usually a served final.svg). */
  constructor(source: string) {
    this.doc = parseSvg(source);
    this.savedText = source;
  }

  /** The live document tree; treat as read-only outside the command set. */
  get document(): SvgDocument {
    return this.doc;
  }

  /** Canonical serialization of the current document. */
  exportSvg(): string {
    return serializeSvg(this.doc);
  }

  /** True when the current document differs from the last loaded/saved text. */
  get dirty(): boolean {
    return this.exportSvg() !== this.savedText;
  }

  /** Record the current serialization as the saved state (after a PUT). */
  markSaved(): void {
    this.savedText = this.exportSvg();
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  get redoDepth(): number {
    return this.redoStack.length;
  }

  /** Component groups in document order. */
  components(): ComponentRef[] {
    const out: ComponentRef[] = [];
    for (const { path, node } of allPaths(this.doc)) {
      if (isComponentGroup(node)) {
        out.push({ afId: afIdOf(node)!, path, node });
      }
    }
    return out;
  }

  /** Path of the component group with the given AF id, or null. */
  componentPath(afId: number): NodePath | null {
    for (const ref of this.components()) {
      if (ref.afId === afId) {
        return ref.path;
      }
    }
    return null;
  }

  nodeAt(path: NodePath): SvgNode | null {
    return nodeAtPath(this.doc, path);
  }

  /**
   * Apply one command. The prior serialization is pushed onto the undo stack
   * (capped at UNDO_LIMIT) and the redo stack is cleared. On a CommandError
   * the document is untouched and no undo entry is created.
   */
  apply(command: Command): void {
    const before = this.exportSvg();
    this.execute(command);
    this.undoStack.push(before);
    if (this.undoStack.length > UNDO_LIMIT) {
      this.undoStack.shift();
    }
    this.redoStack = [];
  }

  /** Restore the serialization preceding the last command. */
  undo(): boolean {
    const prior = this.undoStack.pop();
    if (prior === undefined) {
      return false;
    }
    this.redoStack.push(this.exportSvg());
    this.doc = parseSvg(prior);
    return true;
  }

  /** Re-apply the last undone command's result. */
  redo(): boolean {
    const next = this.redoStack.pop();
    if (next === undefined) {
      return false;
    }
    this.undoStack.push(this.exportSvg());
    this.doc = parseSvg(next);
    return true;
  }

  private target(path: NodePath): SvgNode {
    const node = nodeAtPath(this.doc, path);
    if (node === null) {
      throw new CommandError(`no node at path [${path.join(",")}]`);
    }
    return node;
  }

  private parentChildren(path: NodePath): { siblings: SvgNode[]; index: number } {
    if (path.length === 0) {
      throw new CommandError("command cannot target the document root");
    }
    const index = path[path.length - 1]!;
    let siblings: SvgNode[];
    if (path.length === 1) {
      siblings = this.doc.children;
    } else {
      const parent = this.target(path.slice(0, -1));
      if (isComponentGroup(parent)) {
        // Removing or doubling a component's asset would be rejected on save.
        throw new CommandError("cannot restructure the contents of a component");
      }
      siblings = parent.children;
    }
    if (index < 0 || index >= siblings.length) {
      throw new CommandError(`no node at path [${path.join(",")}]`);
    }
    return { siblings, index };
  }

  private execute(command: Command): void {
    switch (command.kind) {
      case "move":
        this.executeMove(command.path, command.dx, command.dy);
        return;
      case "resize":
        this.executeResize(command.path, command.factor);
        return;
      case "set-text":
        this.executeSetText(command.path, command.text);
        return;
      case "set-style":
        this.executeSetStyle(command.path, command.name, command.value);
        return;
      case "delete":
        this.executeDelete(command.path);
        return;
      case "duplicate":
        this.executeDuplicate(command.path, command.dx, command.dy);
        return;
    }
  }

  private executeMove(path: NodePath, dx: number, dy: number): void {
    requireFinite(dx, "dx");
    requireFinite(dy, "dy");
    shiftNode(this.target(path), dx, dy);
  }

  private executeResize(path: NodePath, factor: number): void {
    requireFinite(factor, "factor");
    if (factor <= 0) {
      throw new CommandError("factor must be positive");
    }
    const node = this.target(path);
    if (isComponentGroup(node)) {
      const image = node.children.find((c) => c.kind === IMAGE);
      if (!image) {
        throw new CommandError("component has no image to resize");
      }
      for (const name of ["width", "height"]) {
        const next = parseNumber(image.attrs[name] ?? "0") * factor;
        if (next < MIN_RESIZE_DIMENSION) {
          throw new CommandError(`resize would make the component ${name} degenerate`);
        }
      }
      for (const name of ["x", "y", "width", "height"]) {
        scaleNumericAttr(image, name, factor);
      }
      return;
    }
    switch (node.kind) {
      case GROUP: {
        const ops = transformOps(node);
        const last = ops[ops.length - 1];
        if (last && last[0] === "scale") {
          ops[ops.length - 1] = ["scale", last[1] * factor];
        } else {
          ops.push(["scale", factor] as TransformOp);
        }
        node.attrs["transform"] = formatTransform(ops);
        return;
      }
      case "rect":
      case "image":
        scaleNumericAttr(node, "width", factor);
        scaleNumericAttr(node, "height", factor);
        return;
      case "circle":
        scaleNumericAttr(node, "r", factor);
        return;
      case "line": {
        const x1 = parseNumber(node.attrs["x1"] ?? "0");
        const y1 = parseNumber(node.attrs["y1"] ?? "0");
        const x2 = parseNumber(node.attrs["x2"] ?? "0");
        const y2 = parseNumber(node.attrs["y2"] ?? "0");
        node.attrs["x2"] = fmtNum(x1 + (x2 - x1) * factor);
        node.attrs["y2"] = fmtNum(y1 + (y2 - y1) * factor);
        return;
      }
      case "text": {
        if (node.attrs["font-size"] === undefined) {
          throw new CommandError("text has no font-size to resize");
        }
        scaleNumericAttr(node, "font-size", factor);
        return;
      }
      default:
        throw new CommandError(`cannot resize <${node.kind}>`);
    }
  }

  private executeSetText(path: NodePath, text: string): void {
    const node = this.target(path);
    if (node.kind !== "text") {
      throw new CommandError(`set-text targets <text>, not <${node.kind}>`);
    }
    node.text = text.trim();
  }

  private executeSetStyle(path: NodePath, name: string, value: string | null): void {
    if (!STYLE_ATTRS.has(name)) {
      throw new CommandError(`'${name}' is not an editable style attribute`);
    }
    const node = this.target(path);
    if (!KIND_ATTRS[node.kind].has(name)) {
      throw new CommandError(`'${name}' is not allowed on <${node.kind}>`);
    }
    if (value === null) {
      delete node.attrs[name];
      return;
    }
    if (STYLE_COLOR.has(name)) {
      node.attrs[name] = canonColor(value);
    } else if (STYLE_NUMERIC.has(name)) {
      const v = parseNumber(value);
      if (v <= 0 && name === "font-size") {
        throw new CommandError("font-size must be positive");
      }
      node.attrs[name] = fmtNum(v);
    } else {
      node.attrs[name] = value;
    }
  }

  private executeDelete(path: NodePath): void {
    const { siblings, index } = this.parentChildren(path);
    siblings.splice(index, 1);
  }

  private executeDuplicate(path: NodePath, dx: number, dy: number): void {
    requireFinite(dx, "dx");
    requireFinite(dy, "dy");
    const { siblings, index } = this.parentChildren(path);
    const original = siblings[index]!;
    const copy = cloneNode(original);
    if (isComponentGroup(copy)) {
      const next = this.nextAfId();
      copy.attrs["id"] = `AF-${next}`;
      if (copy.attrs["data-af"] !== undefined) {
        copy.attrs["data-af"] = String(next);
      }
    } else {
      // A plain duplicate must not reuse element ids.
      for (const node of walk(copy)) {
        delete node.attrs["id"];
      }
    }
    shiftNode(copy, dx, dy);
    siblings.splice(index + 1, 0, copy);
  }

  private nextAfId(): number {
    let max = 0;
    for (const node of iterNodes(this.doc)) {
      const k = afIdOf(node);
      if (k !== null && k > max) {
        max = k;
      }
    }
    return max + 1;
  }
}
