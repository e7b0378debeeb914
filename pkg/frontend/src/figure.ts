// Multi-panel suboptimality figure rendered as a deterministic SVG string:
// one panel per cost axis (sfo / comm / cost), log-scale y, one line per
// solver. No canvas or DOM is involved, so byte-identical output for
// identical inputs is guaranteed.

import * as fs from 'node:fs';
import { parseTraceCsv, TraceRow } from './csv.js';

export type Panel = 'sfo' | 'comm' | 'cost';
export const PANELS: Panel[] = ['sfo', 'comm', 'cost'];

export interface FigureSpec {
  csvPaths: string[];
  panels: Panel[];
  outPath: string;
  logY?: boolean;
}

export interface SolverTrace {
  name: string;
  rows: TraceRow[];
}

const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b'];
const AXIS_LABEL: Record<Panel, string> = {
  sfo: 'SFO per agent',
  comm: 'communication rounds',
  cost: 'cost (SFO + weighted comm)',
};

const PLOT_W = 320;
const PLOT_H = 260;
const MARGIN = { left: 72, right: 18, top: 46, bottom: 52 };

function fmt(v: number): string {
  return v.toFixed(2);
}

function formatTick(v: number): string {
  if (v === 0) return '0';
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(0).replace('+', '');
  return Number.isInteger(v) ? String(v) : String(Number(v.toPrecision(3)));
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const nice = norm <= 1 ? 1 : norm <= 2 ? 2 : norm <= 5 ? 5 : 10;
  return nice * mag;
}

interface Point { x: number; y: number }

function panelPoints(trace: SolverTrace, panel: Panel, logY: boolean): Point[] {
  const pts: Point[] = [];
  for (const row of trace.rows) {
    const y = row.subopt;
    if (Number.isNaN(y) || (logY && y <= 0)) continue;
    pts.push({ x: row[panel], y });
  }
  if (pts.length === 0) {
    throw new Error(`solver "${trace.name}" has no plottable rows for panel "${panel}"`);
  }
  return pts;
}

function renderPanel(traces: SolverTrace[], panel: Panel, originX: number,
                     logY: boolean, parts: string[]): void {
  const series = traces.map((t) => panelPoints(t, panel, logY));
  const xMax = Math.max(...series.flat().map((p) => p.x), 1);
  const yVals = series.flat().map((p) => (logY ? Math.log10(p.y) : p.y));
  let yLo = Math.min(...yVals);
  let yHi = Math.max(...yVals);
  if (logY) {
    yLo = Math.floor(yLo);
    yHi = Math.ceil(yHi);
  }
  if (yHi === yLo) yHi = yLo + 1;

  const x0 = originX + MARGIN.left;
  const y0 = MARGIN.top;
  const sx = (v: number) => x0 + (v / xMax) * PLOT_W;
  const sy = (v: number) => y0 + PLOT_H - ((v - yLo) / (yHi - yLo)) * PLOT_H;

  parts.push(`<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${PLOT_W}" height="${PLOT_H}" fill="none" stroke="#333"/>`);

  const xStep = niceStep(xMax / 4);
  for (let v = 0; v <= xMax + 1e-9; v += xStep) {
    const px = sx(v);
    parts.push(`<line x1="${fmt(px)}" y1="${fmt(y0 + PLOT_H)}" x2="${fmt(px)}" y2="${fmt(y0 + PLOT_H + 5)}" stroke="#333"/>`);
    parts.push(`<text x="${fmt(px)}" y="${fmt(y0 + PLOT_H + 18)}" font-size="11" text-anchor="middle">${formatTick(v)}</text>`);
  }
  const yTickStep = logY ? Math.max(1, Math.ceil((yHi - yLo) / 8)) : (yHi - yLo) / 5;
  for (let v = yLo; v <= yHi + 1e-9; v += yTickStep) {
    const py = sy(v);
    const label = logY ? `1e${v}` : formatTick(v);
    parts.push(`<line x1="${fmt(x0 - 5)}" y1="${fmt(py)}" x2="${fmt(x0)}" y2="${fmt(py)}" stroke="#333"/>`);
    parts.push(`<text x="${fmt(x0 - 8)}" y="${fmt(py + 4)}" font-size="11" text-anchor="end">${label}</text>`);
  }
  parts.push(`<text x="${fmt(x0 + PLOT_W / 2)}" y="${fmt(y0 + PLOT_H + 38)}" font-size="12" text-anchor="middle">${AXIS_LABEL[panel]}</text>`);
  parts.push(`<text x="${fmt(originX + 18)}" y="${fmt(y0 + PLOT_H / 2)}" font-size="12" text-anchor="middle" transform="rotate(-90 ${fmt(originX + 18)} ${fmt(y0 + PLOT_H / 2)})">suboptimality</text>`);

  series.forEach((pts, s) => {
    const coords = pts
      .map((p) => `${fmt(sx(p.x))},${fmt(sy(logY ? Math.log10(p.y) : p.y))}`)
      .join(' ');
    parts.push(`<polyline points="${coords}" fill="none" stroke="${PALETTE[s % PALETTE.length]}" stroke-width="1.5"/>`);
  });
}

export function renderFigure(traces: SolverTrace[], panels: Panel[], logY = true): string {
  if (panels.length === 0) throw new Error('at least one panel is required');
  for (const p of panels) {
    if (!PANELS.includes(p)) throw new Error(`unknown panel "${p}" (choose from ${PANELS.join(', ')})`);
  }
  if (traces.length === 0) throw new Error('no traces to plot');
  const panelSpan = MARGIN.left + PLOT_W + MARGIN.right;
  const width = panelSpan * panels.length;
  const height = MARGIN.top + PLOT_H + MARGIN.bottom;
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`);
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  traces.forEach((t, s) => {
    const lx = 20 + s * 170;
    parts.push(`<line x1="${lx}" y1="18" x2="${lx + 24}" y2="18" stroke="${PALETTE[s % PALETTE.length]}" stroke-width="2"/>`);
    parts.push(`<text x="${lx + 30}" y="22" font-size="12">${t.name}</text>`);
  });
  panels.forEach((panel, i) => renderPanel(traces, panel, i * panelSpan, logY, parts));
  parts.push('</svg>');
  return parts.join('\n') + '\n';
}

export function loadTraces(csvPaths: string[]): SolverTrace[] {
  if (csvPaths.length === 0) throw new Error('at least one --csv path is required');
  const traces: SolverTrace[] = [];
  const seen = new Set<string>();
  for (const path of csvPaths) {
    const rows = parseTraceCsv(fs.readFileSync(path, 'utf8'), path);
    const name = rows[0].solver;
    if (seen.has(name)) throw new Error(`duplicate solver "${name}" in ${path}`);
    seen.add(name);
    traces.push({ name, rows });
  }
  return traces;
}

export function renderFromSpec(spec: FigureSpec): string {
  const svg = renderFigure(loadTraces(spec.csvPaths), spec.panels, spec.logY ?? true);
  fs.writeFileSync(spec.outPath, svg);
  return svg;
}
