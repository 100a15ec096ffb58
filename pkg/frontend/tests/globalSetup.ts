/** Builds desk-scale service artifacts through the CLI (cached between
 * runs) and keeps one service process alive for the integration tests.
 * The base URL is written to .artifacts/api_base so tests can read it
 * without relying on worker-process environment inheritance. */

import { spawn, spawnSync } from 'node:child_process';
import { existsSync, mkdirSync, writeFileSync } from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

const ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..');
const ARTIFACTS = path.join(ROOT, '.artifacts');
const PORT = 8931;

function cli(args: string[]): void {
  const result = spawnSync('python3', ['-m', 'daisy.cli', ...args], {
    cwd: ARTIFACTS,
    env: { ...process.env, DAISY_HOME: ARTIFACTS },
    encoding: 'utf-8',
  });
  if (result.status !== 0) {
    throw new Error(`daisy ${args[0]} failed: ${result.stderr}`);
  }
}

async function waitReady(url: string, attempts = 100): Promise<void> {
  for (let i = 0; i < attempts; i += 1) {
    try {
      const response = await fetch(url);
      if (response.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(`service at ${url} never became ready`);
}

export default async function setup(): Promise<() => void> {
  mkdirSync(ARTIFACTS, { recursive: true });
  if (!existsSync(path.join(ARTIFACTS, 'corpus.bin'))) {
    cli(['gen-corpus', '--seed', '7', '--clips-per-emotion', '10', '--speakers', '1']);
  }
  if (!existsSync(path.join(ARTIFACTS, 'model.bin'))) {
    cli(['train', '--seed', '1', '--epochs', '30', '--batch-size', '8']);
  }
  if (!existsSync(path.join(ARTIFACTS, 'basis.bin'))) {
    cli(['fit']);
  }

  const server = spawn('python3',
    ['-m', 'daisy.cli', 'serve', '--port', String(PORT)],
    { env: { ...process.env, DAISY_HOME: ARTIFACTS }, stdio: 'ignore' });
  const base = `http://127.0.0.1:${PORT}`;
  await waitReady(`${base}/emotions`);
  writeFileSync(path.join(ARTIFACTS, 'api_base'), base);
  return () => {
    server.kill();
  };
}
