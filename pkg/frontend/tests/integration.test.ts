/** Drives the UI session against a real `engine review serve` process, then
 * checks that the exported verdicts change a subsequent compose exactly by
 * the accepted/rejected ids.
 */

import { ChildProcess, execFileSync, spawn } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { Decision, QueueClient } from '../src/api.js';
import { ReviewSession } from '../src/session.js';

const PYTHON = process.env.PYTHON ?? 'python3';

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, '127.0.0.1', () => {
      const address = srv.address();
      if (address === null || typeof address === 'string') {
        reject(new Error('no port'));
        return;
      }
      srv.close(() => resolve(address.port));
    });
  });
}

async function waitForService(base: string, timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${base}/api/stats`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error('review service did not come up');
}

function readManifestIds(path: string): string[] {
  return readFileSync(path, 'utf-8')
    .trim()
    .split('\n')
    .slice(1) // header line
    .filter((line) => line.length > 0)
    .map((line) => (JSON.parse(line) as { id: string }).id);
}

describe('review UI against a live service', () => {
  let root: string;
  let server: ChildProcess | undefined;
  let base: string;
  let borderlineIds: string[];

  beforeAll(async () => {
    root = mkdtempSync(join(tmpdir(), 'review-ui-'));
    const out = execFileSync(PYTHON, [join(__dirname, 'make_fixture.py'), root], {
      encoding: 'utf-8',
    });
    borderlineIds = out.trim().split('\n');
    expect(borderlineIds).toHaveLength(5);

    const port = await freePort();
    base = `http://127.0.0.1:${port}`;
    server = spawn(
      PYTHON,
      [
        '-m', 'synthengine.cli', 'review', 'serve',
        '--decisions', join(root, 'decisions.jsonl'),
        '--images', join(root, 'gen'),
        '--manifest', join(root, 'syn.jsonl'),
        '--log', join(root, 'review.log'),
        '--addr', `127.0.0.1:${port}`,
      ],
      { cwd: root, stdio: ['ignore', 'pipe', 'pipe'] },
    );
    await waitForService(base);
  }, 30000);

  afterAll(() => {
    server?.kill();
    rmSync(root, { recursive: true, force: true });
  });

  it('5 clicks produce 5 matching server-side verdicts and empty the queue', async () => {
    const client = new QueueClient(base);
    const session = new ReviewSession(client, () => undefined, 'ui-test');
    await session.start();

    const clicks: Array<{ id: string; decision: Decision }> = [];
    const script: Decision[] = ['accept', 'reject', 'accept', 'reject', 'accept'];
    for (const decision of script) {
      const state = session.current();
      expect(state.kind).toBe('reviewing');
      if (state.kind !== 'reviewing') break;

      const imageResp = await fetch(client.imageUrl(state.item.id));
      expect(imageResp.status).toBe(200);
      expect((await imageResp.arrayBuffer()).byteLength).toBeGreaterThan(0);

      clicks.push({ id: state.item.id, decision });
      await session.decide(decision);
    }

    const finalState = session.current();
    expect(finalState.kind).toBe('complete');
    if (finalState.kind === 'complete') {
      expect(finalState.stats).toEqual({ pending: 0, accepted: 3, rejected: 2 });
    }
    expect(new Set(clicks.map((c) => c.id))).toEqual(new Set(borderlineIds));

    // Server-side verdicts mirror the clicks exactly.
    const verdictsPath = join(root, 'verdicts.jsonl');
    execFileSync(PYTHON, [
      '-m', 'synthengine.cli', 'review', 'export',
      '--log', join(root, 'review.log'),
      '--out', verdictsPath,
    ]);
    const exported = readFileSync(verdictsPath, 'utf-8')
      .trim()
      .split('\n')
      .map((line) => JSON.parse(line) as { id: string; decision: string; reviewer: string });
    expect(exported).toHaveLength(5);
    const byId = new Map(exported.map((v) => [v.id, v.decision]));
    for (const click of clicks) {
      expect(byId.get(click.id)).toBe(click.decision);
    }
    expect(exported.every((v) => v.reviewer === 'ui-test')).toBe(true);

    // The verdict file alters a subsequent compose by exactly those ids.
    const composedPath = join(root, 'train_C.jsonl');
    execFileSync(PYTHON, [
      '-m', 'synthengine.cli', 'compose',
      '--condition', 'C',
      '--filtered-syn', join(root, 'clean.jsonl'),
      '--raw-syn', join(root, 'syn.jsonl'),
      '--verdicts', verdictsPath,
      '--out', composedPath,
    ]);
    const cleanIds = readManifestIds(join(root, 'clean.jsonl'));
    const accepted = clicks.filter((c) => c.decision === 'accept').map((c) => c.id);
    const rejected = clicks.filter((c) => c.decision === 'reject').map((c) => c.id);
    const want = new Set([...cleanIds, ...accepted]);
    for (const id of rejected) want.delete(id);
    expect(new Set(readManifestIds(composedPath))).toEqual(want);
  }, 30000);
});
