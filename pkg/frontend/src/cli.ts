#!/usr/bin/env node
/** render-figure --spec PATH --out PATH */

import { writeFileSync } from "node:fs";
import { argv, exit, stderr } from "node:process";

import { renderFigure } from "./figures.js";
import { loadSpec } from "./spec.js";
import { SchemaError } from "./csv.js";

function arg(name: string): string {
  const i = argv.indexOf(name);
  if (i < 0 || i + 1 >= argv.length) {
    stderr.write(`usage: render-figure --spec PATH --out PATH\n`);
    exit(2);
  }
  return argv[i + 1];
}

try {
  const spec = loadSpec(arg("--spec"));
  writeFileSync(arg("--out"), renderFigure(spec));
} catch (err) {
  if (err instanceof SchemaError) {
    stderr.write(`schema error: ${err.message}\n`);
    exit(3);
  }
  throw err;
}
