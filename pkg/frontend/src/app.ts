/**
 * Single-page editor served at /app by `figforge serve --app <dist>`.
 *
 * Left panel: submit a generation (or vectorize an uploaded PNG), watch the
 * stage progress, and open artifacts. Canvas: the served figure with every
 * component selectable and draggable; edits run through the EditorSession
 * command set so exports always stay servable. Right panel: inspector,
 * undo/redo, save-back, and the feedback rubric (which also lifts download
 * gating when a deployment enables it).
 */

import { ApiError, FigforgeClient, type JobState } from "./api.js";
import { type Command, CommandError, EditorSession } from "./editor.js";
import {
  type NodePath,
  type SvgNode,
  afIdOf,
  nodeAtPath,
  parseTransform,
  transformOps,
} from "./svgmodel.js";

const client = new FigforgeClient("");

interface AppState {
  jobId: string | null;
  job: JobState | null;
  session: EditorSession | null;
  selected: NodePath | null;
  gated: boolean;
}

const state: AppState = {
  jobId: null,
  job: null,
  session: null,
  selected: null,
  gated: false,
};

function $<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function setStatus(message: string, isError = false): void {
  const el = $("status");
  el.textContent = message;
  el.classList.toggle("error", isError);
}

// -- job submission -----------------------------------------------------------

async function fileToBase64(file: File): Promise<string> {
  const bytes = new Uint8Array(await file.arrayBuffer());
  let binary = "";
  const CHUNK = 0x8000;
  for (let i = 0; i < bytes.length; i += CHUNK) {
    binary += String.fromCharCode(...bytes.subarray(i, i + CHUNK));
  }
  return btoa(binary);
}

async function submitJob(event: Event): Promise<void> {
  event.preventDefault();
  const mode = ($("mode") as HTMLSelectElement).value as "generate" | "vectorize";
  const text = ($("source-text") as HTMLTextAreaElement).value;
  const seedRaw = ($("seed") as HTMLInputElement).value.trim();
  const styleFile = ($("style-file") as HTMLInputElement).files?.[0];
  const imageFile = ($("image-file") as HTMLInputElement).files?.[0];

  try {
    const options: Parameters<FigforgeClient["createJob"]>[0] = { mode };
    if (mode === "generate") {
      options.text = text;
    } else {
      if (!imageFile) {
        setStatus("vectorize mode needs an input PNG", true);
        return;
      }
      options.image = await fileToBase64(imageFile);
    }
    if (styleFile) {
      options.style = await fileToBase64(styleFile);
    }
    if (seedRaw) {
      options.seed = Number(seedRaw);
    }
    setStatus("submitting job…");
    const jobId = await client.createJob(options);
    state.jobId = jobId;
    state.session = null;
    state.selected = null;
    rememberJob(jobId);
    renderJobList();
    await trackJob(jobId);
  } catch (exc) {
    setStatus(describe(exc), true);
  }
}

async function trackJob(jobId: string): Promise<void> {
  setStatus(`job ${jobId}: queued…`);
  try {
    const done = await client.pollJob(jobId, {
      intervalMs: 400,
      timeoutMs: 300_000,
    });
    state.job = done;
    renderArtifacts();
    if (done.state === "failed") {
      setStatus(`job ${jobId} failed at ${done.stage ?? "?"}: ${done.reason ?? ""}`, true);
      return;
    }
    setStatus(`job ${jobId} done`);
    await loadFigure(jobId);
  } catch (exc) {
    setStatus(describe(exc), true);
  }
}

function describe(exc: unknown): string {
  if (exc instanceof ApiError) {
    return exc.message;
  }
  return exc instanceof Error ? exc.message : String(exc);
}

// -- job memory ---------------------------------------------------------------

function recentJobs(): string[] {
  try {
    return JSON.parse(localStorage.getItem("figforge-jobs") ?? "[]") as string[];
  } catch {
    return [];
  }
}

function rememberJob(jobId: string): void {
  const jobs = [jobId, ...recentJobs().filter((j) => j !== jobId)].slice(0, 12);
  localStorage.setItem("figforge-jobs", JSON.stringify(jobs));
}

function renderJobList(): void {
  const list = $("job-list");
  list.textContent = "";
  for (const jobId of recentJobs()) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = jobId;
    link.addEventListener("click", (e) => {
      e.preventDefault();
      state.jobId = jobId;
      void trackJob(jobId);
    });
    item.appendChild(link);
    list.appendChild(item);
  }
}

function renderArtifacts(): void {
  const box = $("artifacts");
  box.textContent = "";
  if (!state.jobId) {
    return;
  }
  for (const name of ["final.svg", "template.svg", "raw.png", "manifest.json", "refine.log.json"]) {
    const link = document.createElement("a");
    link.href = client.artifactUrl(state.jobId, name);
    link.textContent = name;
    link.target = "_blank";
    box.appendChild(link);
  }
}

// -- canvas -------------------------------------------------------------------

async function loadFigure(jobId: string): Promise<void> {
  try {
    const served = await client.fetchSvg(jobId);
    state.session = new EditorSession(served);
    state.selected = null;
    state.gated = false;
    renderCanvas();
    setStatus(`job ${jobId}: figure loaded`);
  } catch (exc) {
    if (exc instanceof ApiError && exc.status === 423) {
      state.gated = true;
      state.session = null;
      renderCanvas();
      setStatus("download gated: submit feedback below to unlock the figure", true);
      return;
    }
    setStatus(describe(exc), true);
  }
}

function svgRoot(): SVGSVGElement | null {
  return $("canvas").querySelector("svg");
}

function renderCanvas(): void {
  const canvas = $("canvas");
  if (!state.session) {
    canvas.innerHTML = state.gated
      ? '<p class="placeholder">figure locked until feedback is submitted</p>'
      : '<p class="placeholder">no figure loaded</p>';
    renderInspector();
    return;
  }
  canvas.innerHTML = state.session.exportSvg();
  const svg = svgRoot();
  if (svg) {
    svg.removeAttribute("width");
    svg.removeAttribute("height");
    highlightSelection();
  }
  renderInspector();
}

/** Child-index path of a rendered element, aligned with the document tree. */
function domPath(element: Element): NodePath | null {
  const svg = svgRoot();
  if (!svg) {
    return null;
  }
  const path: number[] = [];
  let current: Element | null = element;
  while (current && current !== svg) {
    const parent: Element | null = current.parentElement;
    if (!parent) {
      return null;
    }
    path.unshift(Array.prototype.indexOf.call(parent.children, current));
    current = parent;
  }
  return current === svg ? path : null;
}

function pathKey(path: NodePath): string {
  return path.join(".");
}

function elementAtPath(path: NodePath): Element | null {
  let el: Element | null | undefined = svgRoot();
  for (const index of path) {
    el = el?.children[index];
  }
  return el ?? null;
}

function highlightSelection(): void {
  const svg = svgRoot();
  if (!svg) {
    return;
  }
  for (const el of svg.querySelectorAll(".af-selected")) {
    el.classList.remove("af-selected");
  }
  if (state.selected) {
    elementAtPath(state.selected)?.classList.add("af-selected");
  }
}

function select(path: NodePath | null): void {
  state.selected = path;
  highlightSelection();
  renderInspector();
}

function canvasClick(event: MouseEvent): void {
  if (!state.session) {
    return;
  }
  const target = event.target as Element;
  const component = target.closest("g.af-component");
  const chosen = component ?? (target.closest("#canvas svg *") as Element | null);
  if (!chosen) {
    select(null);
    return;
  }
  select(domPath(chosen));
}

// -- dragging -----------------------------------------------------------------

interface DragState {
  path: NodePath;
  startX: number;
  startY: number;
  baseTx: number;
  baseTy: number;
  element: Element;
  moved: boolean;
}

let drag: DragState | null = null;

function unitsPerPixel(): number {
  const svg = svgRoot();
  const session = state.session;
  if (!svg || !session) {
    return 1;
  }
  const width = svg.getBoundingClientRect().width;
  return width > 0 ? session.document.viewBox[2] / width : 1;
}

function dragStart(event: PointerEvent): void {
  if (!state.session) {
    return;
  }
  const group = (event.target as Element).closest("g.af-component");
  if (!group) {
    return;
  }
  const path = domPath(group);
  if (!path) {
    return;
  }
  const node = nodeAtPath(state.session.document, path);
  if (!node) {
    return;
  }
  const ops = transformOps(node);
  const first = ops[0];
  const [baseTx, baseTy] = first && first[0] === "translate" ? [first[1], first[2]] : [0, 0];
  drag = {
    path,
    startX: event.clientX,
    startY: event.clientY,
    baseTx,
    baseTy,
    element: group,
    moved: false,
  };
  select(path);
  event.preventDefault();
}

function dragMove(event: PointerEvent): void {
  if (!drag) {
    return;
  }
  const scale = unitsPerPixel();
  const dx = (event.clientX - drag.startX) * scale;
  const dy = (event.clientY - drag.startY) * scale;
  if (Math.abs(dx) + Math.abs(dy) > 0.01) {
    drag.moved = true;
  }
  drag.element.setAttribute(
    "transform",
    `translate(${drag.baseTx + dx},${drag.baseTy + dy})`,
  );
}

function dragEnd(event: PointerEvent): void {
  if (!drag) {
    return;
  }
  const finished = drag;
  drag = null;
  const scale = unitsPerPixel();
  const dx = (event.clientX - finished.startX) * scale;
  const dy = (event.clientY - finished.startY) * scale;
  if (finished.moved && state.session) {
    applyCommand({ kind: "move", path: finished.path, dx, dy });
  } else {
    renderCanvas();
  }
}

// -- inspector ----------------------------------------------------------------

function selectedNode(): SvgNode | null {
  if (!state.session || !state.selected) {
    return null;
  }
  return nodeAtPath(state.session.document, state.selected);
}

function applyCommand(command: Command): void {
  const session = state.session;
  if (!session) {
    return;
  }
  try {
    session.apply(command);
    // Deleting or duplicating shifts sibling paths; drop a selection that may
    // no longer point at the same node.
    if (command.kind === "delete") {
      state.selected = null;
    } else if (
      command.kind === "duplicate" &&
      state.selected &&
      pathKey(state.selected) !== pathKey(command.path)
    ) {
      state.selected = null;
    }
    renderCanvas();
    setStatus(session.dirty ? "unsaved changes" : "in sync with server");
  } catch (exc) {
    if (exc instanceof CommandError) {
      setStatus(exc.message, true);
      renderCanvas();
      return;
    }
    throw exc;
  }
}

function renderInspector(): void {
  const info = $("selection-info");
  const session = state.session;
  const node = selectedNode();
  const buttons = $("node-actions");
  buttons.querySelectorAll("button").forEach((b) => {
    (b as HTMLButtonElement).disabled = !node;
  });
  ($("undo-btn") as HTMLButtonElement).disabled = !session || session.undoDepth === 0;
  ($("redo-btn") as HTMLButtonElement).disabled = !session || session.redoDepth === 0;
  ($("save-btn") as HTMLButtonElement).disabled = !session || !session.dirty;
  ($("reload-btn") as HTMLButtonElement).disabled = !state.jobId;
  ($("edit-text-btn") as HTMLButtonElement).disabled = !node || node.kind !== "text";

  if (!node) {
    info.textContent = session
      ? "click a component or element to edit it"
      : "";
    return;
  }
  const af = afIdOf(node);
  const bits = [`<${node.kind}>`];
  if (af !== null) {
    bits.push(`component AF-${af}`);
  }
  if (node.attrs["transform"]) {
    bits.push(node.attrs["transform"]);
  }
  info.textContent = bits.join(" · ");
}

function withSelection(make: (path: NodePath) => Command): void {
  if (!state.session || !state.selected) {
    return;
  }
  applyCommand(make(state.selected));
}

async function saveBack(): Promise<void> {
  const session = state.session;
  if (!session || !state.jobId) {
    return;
  }
  try {
    await client.putSvg(state.jobId, session.exportSvg());
    session.markSaved();
    renderInspector();
    setStatus("saved to server");
  } catch (exc) {
    setStatus(describe(exc), true);
  }
}

// -- feedback -----------------------------------------------------------------

async function submitFeedback(event: Event): Promise<void> {
  event.preventDefault();
  if (!state.jobId) {
    setStatus("no job selected", true);
    return;
  }
  const likert = (id: string) => Number(($(id) as HTMLSelectElement).value);
  try {
    await client.submitFeedback(state.jobId, {
      semantic_correctness: likert("fb-semantic"),
      information_completeness: likert("fb-completeness"),
      visual_quality: likert("fb-visual"),
      style_consistency: likert("fb-style"),
      conversion_correctness: likert("fb-conversion"),
      usability: ($("fb-usability") as HTMLInputElement).checked ? 1 : 0,
      free_text: ($("fb-text") as HTMLTextAreaElement).value || undefined,
    });
    setStatus("feedback submitted — thank you");
    if (state.gated) {
      await loadFigure(state.jobId);
    }
  } catch (exc) {
    setStatus(describe(exc), true);
  }
}

// -- wiring -------------------------------------------------------------------

function init(): void {
  $("job-form").addEventListener("submit", (e) => void submitJob(e));
  $("feedback-form").addEventListener("submit", (e) => void submitFeedback(e));
  $("mode").addEventListener("change", () => {
    const vectorize = ($("mode") as HTMLSelectElement).value === "vectorize";
    $("generate-fields").hidden = vectorize;
    $("vectorize-fields").hidden = !vectorize;
  });

  const canvas = $("canvas");
  canvas.addEventListener("click", canvasClick);
  canvas.addEventListener("pointerdown", dragStart);
  window.addEventListener("pointermove", dragMove);
  window.addEventListener("pointerup", dragEnd);

  $("undo-btn").addEventListener("click", () => {
    state.session?.undo();
    state.selected = null;
    renderCanvas();
  });
  $("redo-btn").addEventListener("click", () => {
    state.session?.redo();
    state.selected = null;
    renderCanvas();
  });
  $("grow-btn").addEventListener("click", () =>
    withSelection((path) => ({ kind: "resize", path, factor: 1.1 })),
  );
  $("shrink-btn").addEventListener("click", () =>
    withSelection((path) => ({ kind: "resize", path, factor: 0.9 })),
  );
  $("delete-btn").addEventListener("click", () =>
    withSelection((path) => ({ kind: "delete", path })),
  );
  $("duplicate-btn").addEventListener("click", () =>
    withSelection((path) => ({ kind: "duplicate", path, dx: 16, dy: 12 })),
  );
  $("edit-text-btn").addEventListener("click", () => {
    const node = selectedNode();
    if (!node || node.kind !== "text") {
      return;
    }
    const text = window.prompt("text content", node.text);
    if (text !== null) {
      withSelection((path) => ({ kind: "set-text", path, text }));
    }
  });
  $("fill-input").addEventListener("change", () => {
    const value = ($("fill-input") as HTMLInputElement).value;
    withSelection((path) => ({ kind: "set-style", path, name: "fill", value }));
  });
  $("save-btn").addEventListener("click", () => void saveBack());
  $("reload-btn").addEventListener("click", () => {
    if (state.jobId) {
      void loadFigure(state.jobId);
    }
  });

  renderJobList();
  renderCanvas();
  setStatus("ready");
}

init();
