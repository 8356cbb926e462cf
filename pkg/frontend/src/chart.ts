import type { ChartSpec } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 260;

const PALETTE = [
  "#2563eb", "#059669", "#d97706", "#dc2626",
  "#7c3aed", "#0d9488", "#f59e0b", "#6366f1",
];

function svgElement<K extends keyof SVGElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = doc.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, value);
  }
  return el;
}

function formatValue(value: number, unit: string): string {
  const text = value.toLocaleString("en-US");
  return unit ? `${text} ${unit}` : text;
}

function color(i: number): string {
  return PALETTE[i % PALETTE.length] ?? "#888888";
}

/**
 * Render a chart spec to an inline SVG. Pure DOM construction: the engine
 * sends data only, the client draws.
 */
export function renderChart(spec: ChartSpec, doc: Document = document): SVGSVGElement {
  if (!spec.series.length) {
    throw new Error("chart has no series");
  }
  const svg = svgElement(doc, "svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    class: `chart chart-${spec.kind}`,
    role: "img",
  });
  const title = svgElement(doc, "title");
  title.textContent = spec.title;
  svg.appendChild(title);
  switch (spec.kind) {
    case "pie":
      renderPie(svg, spec, doc);
      break;
    case "bar":
      renderBar(svg, spec, doc);
      break;
    case "line":
      renderLine(svg, spec, doc);
      break;
    default:
      throw new Error(`unknown chart kind ${(spec as ChartSpec).kind}`);
  }
  return svg;
}

function renderPie(svg: SVGSVGElement, spec: ChartSpec, doc: Document): void {
  if (spec.series.length < 2) {
    throw new Error("a pie chart needs at least 2 slices");
  }
  if (spec.series.some((p) => p.value < 0)) {
    throw new Error("pie chart values must be non-negative");
  }
  const total = spec.series.reduce((sum, p) => sum + p.value, 0);
  if (total <= 0) {
    throw new Error("pie chart needs a positive total");
  }
  const cx = HEIGHT / 2;
  const cy = HEIGHT / 2;
  const radius = HEIGHT / 2 - 10;
  let angle = -Math.PI / 2;
  spec.series.forEach((point, i) => {
    const sweep = Math.min((point.value / total) * 2 * Math.PI, 2 * Math.PI - 1e-4);
    const x1 = cx + radius * Math.cos(angle);
    const y1 = cy + radius * Math.sin(angle);
    const x2 = cx + radius * Math.cos(angle + sweep);
    const y2 = cy + radius * Math.sin(angle + sweep);
    const largeArc = sweep > Math.PI ? 1 : 0;
    const path = svgElement(doc, "path", {
      class: "chart-slice",
      d: `M ${cx} ${cy} L ${x1} ${y1} A ${radius} ${radius} 0 ${largeArc} 1 ${x2} ${y2} Z`,
      fill: color(i),
    });
    path.appendChild(svgElement(doc, "title")).textContent = point.label;
    svg.appendChild(path);
    const label = svgElement(doc, "text", {
      class: "chart-slice-label",
      x: String(HEIGHT + 10),
      y: String(24 + i * 20),
      fill: color(i),
    });
    label.textContent = `${point.label}: ${formatValue(point.value, spec.unit)}`;
    svg.appendChild(label);
    angle += sweep;
  });
}

function renderBar(svg: SVGSVGElement, spec: ChartSpec, doc: Document): void {
  const max = Math.max(...spec.series.map((p) => p.value), 0);
  const plotHeight = HEIGHT - 60;
  const slot = WIDTH / spec.series.length;
  const barWidth = Math.min(slot * 0.6, 80);
  spec.series.forEach((point, i) => {
    const barHeight = max > 0 ? Math.max((point.value / max) * plotHeight, 1) : 1;
    const x = slot * i + (slot - barWidth) / 2;
    const y = 20 + (plotHeight - barHeight);
    const bar = svgElement(doc, "rect", {
      class: "chart-bar",
      x: String(x),
      y: String(y),
      width: String(barWidth),
      height: String(barHeight),
      fill: color(i),
    });
    bar.appendChild(svgElement(doc, "title")).textContent = formatValue(point.value, spec.unit);
    svg.appendChild(bar);
    const label = svgElement(doc, "text", {
      class: "chart-bar-label",
      x: String(slot * i + slot / 2),
      y: String(HEIGHT - 24),
      "text-anchor": "middle",
    });
    label.textContent = point.label;
    svg.appendChild(label);
  });
}

function renderLine(svg: SVGSVGElement, spec: ChartSpec, doc: Document): void {
  const max = Math.max(...spec.series.map((p) => p.value), 0);
  const plotHeight = HEIGHT - 60;
  const slot = WIDTH / Math.max(spec.series.length - 1, 1);
  const points = spec.series.map((point, i) => {
    const x = spec.series.length === 1 ? WIDTH / 2 : slot * i;
    const y = 20 + plotHeight - (max > 0 ? (point.value / max) * plotHeight : 0);
    return { x, y, point };
  });
  svg.appendChild(
    svgElement(doc, "polyline", {
      class: "chart-line",
      points: points.map(({ x, y }) => `${x},${y}`).join(" "),
      fill: "none",
      stroke: color(0),
      "stroke-width": "2",
    }),
  );
  points.forEach(({ x, y, point }, i) => {
    svg.appendChild(
      svgElement(doc, "circle", {
        class: "chart-point",
        cx: String(x),
        cy: String(y),
        r: "4",
        fill: color(0),
      }),
    );
    const label = svgElement(doc, "text", {
      class: "chart-point-label",
      x: String(x),
      y: String(HEIGHT - 24),
      "text-anchor": "middle",
    });
    label.textContent = point.label;
    svg.appendChild(label);
  });
}
