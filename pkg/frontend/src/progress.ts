/** Session dashboard: iteration counters, labeling progress, and the
 * F1-per-iteration chart. Everything here is read-only; in oracle mode the
 * dashboard is the whole UI, since the server never waits for a human. */

import type { Report, SessionStatus } from "./api";

const SVG_NS = "http://www.w3.org/2000/svg";

export const STATE_TEXT: Record<SessionStatus["state"], string> = {
  running: "model training",
  waiting_for_labels: "waiting for labels",
  ready_to_advance: "batch labeled",
  done: "session finished",
  failed: "session failed",
};

function counter(label: string, value: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "counter";
  const num = document.createElement("strong");
  num.textContent = value;
  const name = document.createElement("span");
  name.textContent = label;
  box.append(num, name);
  return box;
}

export function renderStatus(status: SessionStatus): HTMLElement {
  const el = document.createElement("div");
  el.className = "status";

  const badge = document.createElement("span");
  badge.className = `state state-${status.state}`;
  badge.textContent = STATE_TEXT[status.state];
  el.appendChild(badge);

  el.appendChild(counter("iterations done", String(status.iteration)));
  el.appendChild(counter("labels total", String(status.total_labels)));

  const batch = status.labeled_this_iteration + status.pending;
  if (batch > 0) {
    el.appendChild(
      counter("this batch", `${status.labeled_this_iteration} / ${batch}`),
    );
    const bar = document.createElement("progress");
    bar.max = batch;
    bar.value = status.labeled_this_iteration;
    el.appendChild(bar);
  }
  if (status.last_f1 !== null) {
    el.appendChild(counter("last F1", status.last_f1.toFixed(3)));
  }
  if (status.error) {
    const err = document.createElement("p");
    err.className = "error";
    err.textContent = status.error;
    el.appendChild(err);
  }
  return el;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

/** F1 against labels spent, one point per iteration that measured it.
 * Returns null when no iteration has an F1 (no test labels on the server),
 * in which case the chart is omitted entirely. */
export function renderChart(reports: Report[]): SVGSVGElement | null {
  const points = reports.filter((r): r is Report & { f1: number } => r.f1 !== null);
  if (points.length === 0) return null;

  const width = 420;
  const height = 220;
  const pad = { left: 42, right: 14, top: 12, bottom: 30 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;
  const maxLabels = Math.max(...points.map((p) => p.labels_used));
  const x = (labels: number) =>
    pad.left + (maxLabels === 0 ? 0 : (labels / maxLabels) * innerW);
  const y = (f1: number) => pad.top + (1 - f1) * innerH;

  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "f1-chart",
    role: "img",
    "aria-label": "F1 by labels used",
  });

  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    svg.appendChild(
      svgEl("line", {
        x1: String(pad.left),
        x2: String(width - pad.right),
        y1: String(y(tick)),
        y2: String(y(tick)),
        class: "grid",
      }),
    );
    const lab = svgEl("text", {
      x: String(pad.left - 6),
      y: String(y(tick) + 4),
      "text-anchor": "end",
      class: "tick",
    });
    lab.textContent = tick.toFixed(2);
    svg.appendChild(lab);
  }

  const coords = points.map((p) => `${x(p.labels_used)},${y(p.f1)}`);
  svg.appendChild(svgEl("polyline", { points: coords.join(" "), class: "f1-line" }));
  for (const p of points) {
    const dot = svgEl("circle", {
      cx: String(x(p.labels_used)),
      cy: String(y(p.f1)),
      r: "3.5",
      class: "f1-dot",
    });
    const tip = document.createElementNS(SVG_NS, "title");
    tip.textContent = `${p.labels_used} labels: F1 ${p.f1.toFixed(3)}`;
    dot.appendChild(tip);
    svg.appendChild(dot);
  }

  const xlab = svgEl("text", {
    x: String(pad.left + innerW / 2),
    y: String(height - 8),
    "text-anchor": "middle",
    class: "axis",
  });
  xlab.textContent = "labels used";
  svg.appendChild(xlab);
  return svg;
}

export function renderProgress(
  status: SessionStatus,
  reports: Report[],
): HTMLElement {
  const el = document.createElement("section");
  el.className = "progress-panel";
  el.appendChild(renderStatus(status));
  const chart = renderChart(reports);
  if (chart) el.appendChild(chart);
  return el;
}
