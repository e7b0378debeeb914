import * as fs from 'node:fs';
import * as path from 'node:path';
import { describe, expect, it } from 'vitest';
import { parseTraceCsv } from '../src/csv.js';

const FIXTURES = path.join(__dirname, 'fixtures');

function fixture(name: string): string {
  return fs.readFileSync(path.join(FIXTURES, name), 'utf8');
}

describe('parseTraceCsv', () => {
  it('parses a benchmark trace', () => {
    const rows = parseTraceCsv(fixture('pmgt_katyushax.csv'), 'kat');
    expect(rows.length).toBe(61);
    expect(rows[0].solver).toBe('pmgt_katyushax');
    expect(rows[0].epoch).toBe(0);
    expect(rows[1].sfo).toBeGreaterThan(rows[0].sfo);
    expect(rows[0].cost).toBe(rows[0].sfo + rows[0].comm);
  });

  it('round-trips float values exactly', () => {
    const text = 'solver,epoch,sfo,comm,cost,subopt,consensus\n'
      + 'x,0,1,2,3,0.1000000000000000055511151231257827,4\n';
    expect(parseTraceCsv(text)[0].subopt).toBe(0.1);
  });

  it('names the missing column', () => {
    const text = 'solver,epoch,sfo,comm,cost,consensus\nx,0,1,2,3,4\n';
    expect(() => parseTraceCsv(text, 'f.csv')).toThrow(/f\.csv: missing column "subopt"/);
  });

  it('rejects empty data', () => {
    expect(() => parseTraceCsv('solver,epoch,sfo,comm,cost,subopt,consensus\n', 'e.csv'))
      .toThrow(/no data rows/);
    expect(() => parseTraceCsv('', 'e.csv')).toThrow(/empty file/);
  });

  it('tolerates and ignores extra columns', () => {
    const base = 'solver,epoch,sfo,comm,cost,subopt,consensus\nx,0,1,2,3,0.5,0\n';
    const extra = 'solver,epoch,sfo,comm,cost,subopt,consensus,wall\nx,0,1,2,3,0.5,0,9.9\n';
    expect(parseTraceCsv(extra)).toEqual(parseTraceCsv(base));
  });

  it('reports bad numerics with line number and column', () => {
    const text = 'solver,epoch,sfo,comm,cost,subopt,consensus\nx,0,1,2,3,oops,0\n';
    expect(() => parseTraceCsv(text, 'b.csv')).toThrow(/b\.csv:2: column "subopt"/);
  });

  it('accepts nan suboptimality as NaN', () => {
    const text = 'solver,epoch,sfo,comm,cost,subopt,consensus\nx,0,1,2,3,nan,0\n';
    expect(Number.isNaN(parseTraceCsv(text)[0].subopt)).toBe(true);
  });
});
