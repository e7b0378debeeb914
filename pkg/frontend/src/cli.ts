// Usage: plot --csv a.csv b.csv ... [--panels sfo,comm,cost] [--out fig.svg]

import { FigureSpec, Panel, PANELS, renderFromSpec } from './figure.js';

export function parseArgs(argv: string[]): FigureSpec {
  if (argv[0] !== 'plot') {
    throw new Error(`unknown command "${argv[0] ?? ''}"; expected: plot --csv <paths...>`);
  }
  const csvPaths: string[] = [];
  let panels: Panel[] = [...PANELS];
  let outPath = 'fig.svg';
  let i = 1;
  while (i < argv.length) {
    const flag = argv[i];
    if (flag === '--csv') {
      i += 1;
      while (i < argv.length && !argv[i].startsWith('--')) {
        csvPaths.push(argv[i]);
        i += 1;
      }
    } else if (flag === '--panels') {
      const raw = argv[i + 1];
      if (!raw) throw new Error('--panels needs a comma-separated list');
      panels = raw.split(',').map((p) => p.trim()) as Panel[];
      i += 2;
    } else if (flag === '--out') {
      if (!argv[i + 1]) throw new Error('--out needs a path');
      outPath = argv[i + 1];
      i += 2;
    } else {
      throw new Error(`unknown flag "${flag}"`);
    }
  }
  if (csvPaths.length === 0) throw new Error('at least one --csv path is required');
  return { csvPaths, panels, outPath };
}

export function main(argv: string[]): number {
  const spec = parseArgs(argv);
  renderFromSpec(spec);
  console.log(`wrote ${spec.outPath} (${spec.panels.join(',')} x ${spec.csvPaths.length} traces)`);
  return 0;
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url.endsWith(process.argv[1].split('/').pop() ?? '!');
if (invokedDirectly) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
