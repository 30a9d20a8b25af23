import { ApiError, getHealth, requestAvatar, type AvatarResponse } from "./api";
import {
  MEASUREMENT_ORDER,
  deltaSign,
  displayLevel,
  displayName,
  formatDelta,
  formatMeasurement,
  labelTone,
} from "./format";
import { RunHistory } from "./history";
import { LatestWins } from "./queue";
import { MeshViewer } from "./viewer";

const history = new RunHistory();
const queue = new LatestWins(requestAvatar);
let viewer: MeshViewer;

let promptInput: HTMLInputElement;
let statusLine: HTMLElement;
let errorBox: HTMLElement;
let solveStatus: HTMLElement;
let chips: HTMLElement;
let measurementsTable: HTMLTableElement;
let historyList: HTMLOListElement;
let compareControls: HTMLElement;
let compareA: HTMLSelectElement;
let compareB: HTMLSelectElement;
let compareTable: HTMLTableElement;

window.addEventListener("DOMContentLoaded", () => {
  promptInput = document.querySelector("#prompt")!;
  statusLine = document.querySelector("#service-status")!;
  errorBox = document.querySelector("#error")!;
  solveStatus = document.querySelector("#solve-status")!;
  chips = document.querySelector("#chips")!;
  measurementsTable = document.querySelector("#measurements")!;
  historyList = document.querySelector("#history-list")!;
  compareControls = document.querySelector("#compare-controls")!;
  compareA = document.querySelector("#compare-a")!;
  compareB = document.querySelector("#compare-b")!;
  compareTable = document.querySelector("#compare-table")!;

  viewer = new MeshViewer(document.querySelector("#viewer")!);

  document.querySelector("#prompt-form")!.addEventListener("submit", (event) => {
    event.preventDefault();
    void submit(promptInput.value);
  });

  document.querySelectorAll<HTMLButtonElement>("#examples button").forEach((b) =>
    b.addEventListener("click", () => {
      promptInput.value = b.dataset.prompt ?? "";
      void submit(promptInput.value);
    }),
  );

  compareA.addEventListener("change", renderCompare);
  compareB.addEventListener("change", renderCompare);

  void showHealth();
});

async function showHealth(): Promise<void> {
  try {
    const health = await getHealth();
    statusLine.textContent =
      `service ${health.version} — mesh ${health.asset.vertices} vertices / ` +
      `${health.asset.faces} faces`;
  } catch {
    statusLine.textContent = "service unreachable — run `bodyforge serve` and reload";
  }
}

async function submit(text: string): Promise<void> {
  const trimmed = text.trim();
  if (!trimmed) return;
  statusLine.textContent = "solving…";
  errorBox.hidden = true;
  try {
    const response = await queue.submit(trimmed);
    if (response === null) return; // a newer prompt superseded this one
    renderResponse(trimmed, response);
    statusLine.textContent = "ready";
  } catch (err) {
    statusLine.textContent = "ready";
    showError(err);
  }
}

function renderResponse(prompt: string, response: AvatarResponse): void {
  viewer.showMesh(response.mesh.vertices, response.mesh.faces);

  const mentioned = new Set(response.solve.report.map((r) => r.measurement));
  renderSolveStatus(response);
  renderChips(response, mentioned);
  renderMeasurements(response, mentioned);

  history.add({
    prompt,
    beta: response.beta,
    measurements: response.measurements,
    labels: response.labels,
    satisfied: response.solve.satisfied,
  });
  renderHistory();
}

function renderSolveStatus(response: AvatarResponse): void {
  const unmet = response.solve.report.filter((r) => !r.satisfied);
  const badge = response.solve.satisfied
    ? `<span class="badge ok">constraints satisfied</span>`
    : `<span class="badge partial">best effort — ${unmet.length} unmet</span>`;
  const detail = unmet
    .map((r) => `${displayName(r.measurement)} wanted ${displayLevel(r.level)}`)
    .join(", ");
  solveStatus.innerHTML =
    badge +
    `<span class="muted">${response.solve.iterations} iterations` +
    (detail ? ` · ${detail}` : "") +
    `</span>`;
  solveStatus.hidden = false;
}

function renderChips(response: AvatarResponse, mentioned: Set<string>): void {
  chips.replaceChildren(
    ...MEASUREMENT_ORDER.map((name) => {
      const level = response.labels[name];
      const chip = document.createElement("span");
      chip.className = `chip ${labelTone(level)}`;
      if (mentioned.has(name)) chip.classList.add("mentioned");
      chip.textContent = `${displayName(name)}: ${displayLevel(level)}`;
      return chip;
    }),
  );
}

function renderMeasurements(response: AvatarResponse, mentioned: Set<string>): void {
  const body = measurementsTable.tBodies[0];
  body.replaceChildren(
    ...MEASUREMENT_ORDER.map((name) => {
      const row = document.createElement("tr");
      const value = response.measurements[name];
      row.innerHTML =
        `<td>${displayName(name)}${mentioned.has(name) ? " ◂" : ""}</td>` +
        `<td class="num">${formatMeasurement(name, value)}</td>` +
        `<td>${displayLevel(response.labels[name])}</td>`;
      return row;
    }),
  );
  measurementsTable.hidden = false;
}

function renderHistory(): void {
  const runs = history.all();
  historyList.replaceChildren(
    ...runs.map((run) => {
      const item = document.createElement("li");
      item.textContent = `#${run.id} · ${run.prompt}${run.satisfied ? "" : " (partial)"}`;
      return item;
    }),
  );

  if (runs.length >= 2) {
    const options = runs
      .map((r) => `<option value="${r.id}">#${r.id} ${r.prompt}</option>`)
      .join("");
    const pair = history.latestPair()!;
    compareA.innerHTML = options;
    compareB.innerHTML = options;
    compareA.value = String(pair[0].id);
    compareB.value = String(pair[1].id);
    compareControls.hidden = false;
    renderCompare();
  }
}

function renderCompare(): void {
  const a = Number(compareA.value);
  const b = Number(compareB.value);
  if (!a || !b) return;
  const deltas = history.compare(a, b);
  const byName = new Map(deltas.map((d) => [d.name, d]));
  const body = compareTable.tBodies[0];
  body.replaceChildren(
    ...MEASUREMENT_ORDER.flatMap((name) => {
      const d = byName.get(name);
      if (!d) return [];
      const sign = deltaSign(d.delta);
      const cls = sign > 0 ? "delta-pos" : sign < 0 ? "delta-neg" : "delta-zero";
      const row = document.createElement("tr");
      row.innerHTML =
        `<td>${displayName(name)}</td>` +
        `<td class="num">${formatMeasurement(name, d.before)} <span class="muted">${displayLevel(d.beforeLabel)}</span></td>` +
        `<td class="num">${formatMeasurement(name, d.after)} <span class="muted">${displayLevel(d.afterLabel)}</span></td>` +
        `<td class="num ${cls}">${formatDelta(name, d.delta)}</td>`;
      return [row];
    }),
  );
  compareTable.hidden = false;
}

function showError(err: unknown): void {
  if (err instanceof ApiError && err.diagnostics) {
    const spans = err.diagnostics.unmatched_spans;
    errorBox.innerHTML =
      `couldn't read that description` +
      (spans.length
        ? `<div class="spans">not recognized: ${spans.map((s) => `“${s}”`).join(", ")}</div>`
        : "");
  } else if (err instanceof ApiError) {
    errorBox.textContent = err.message;
  } else {
    errorBox.textContent = "request failed — is the service running?";
  }
  errorBox.hidden = false;
}
