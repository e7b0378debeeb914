// Strict reader for the harness trace schema. Extra columns are tolerated
// and ignored; missing or non-numeric required columns are hard errors.

export interface TraceRow {
  solver: string;
  epoch: number;
  sfo: number;
  comm: number;
  cost: number;
  subopt: number;
  consensus: number;
}

export const REQUIRED_COLUMNS = [
  'solver', 'epoch', 'sfo', 'comm', 'cost', 'subopt', 'consensus',
] as const;

const NUMERIC_COLUMNS = REQUIRED_COLUMNS.filter((c) => c !== 'solver');

function parseNumber(raw: string, column: string, line: number, source: string): number {
  if (raw.toLowerCase() === 'nan') return NaN;
  const value = Number(raw);
  if (raw.trim() === '' || Number.isNaN(value)) {
    throw new Error(`${source}:${line}: column "${column}" is not numeric: ${JSON.stringify(raw)}`);
  }
  return value;
}

export function parseTraceCsv(text: string, source = '<csv>'): TraceRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new Error(`${source}: empty file`);
  const header = lines[0].split(',').map((h) => h.trim());
  const index = new Map<string, number>();
  header.forEach((name, i) => index.set(name, i));
  for (const col of REQUIRED_COLUMNS) {
    if (!index.has(col)) throw new Error(`${source}: missing column "${col}"`);
  }
  if (lines.length === 1) throw new Error(`${source}: no data rows`);
  const rows: TraceRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(',');
    if (cells.length < header.length) {
      throw new Error(`${source}:${i + 1}: expected ${header.length} cells, got ${cells.length}`);
    }
    const row = { solver: cells[index.get('solver')!].trim() } as TraceRow;
    for (const col of NUMERIC_COLUMNS) {
      row[col] = parseNumber(cells[index.get(col)!], col, i + 1, source);
    }
    rows.push(row);
  }
  return rows;
}
