/** Typed client for the review service's four endpoints. */

export interface StructScoreView {
  area_ratio: number;
  kpt_count: number;
  person_found: boolean;
}

export interface ReviewItemView {
  id: string;
  image_path: string;
  s_sem: number;
  s_struct: StructScoreView | null;
  stage: string;
  enqueued_at: number;
  status: string;
}

export interface QueueStats {
  pending: number;
  accepted: number;
  rejected: number;
}

export type Decision = 'accept' | 'reject';

export type VerdictOutcome =
  | { kind: 'ok'; decidedAt: number }
  | { kind: 'conflict'; message: string }
  | { kind: 'not_found'; message: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class QueueClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = '', fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
  }

  imageUrl(id: string): string {
    return `${this.baseUrl}/api/item/${id}/image`;
  }

  async fetchNext(): Promise<ReviewItemView | null> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/queue/next`);
    if (resp.status === 204) return null;
    if (!resp.ok) throw new Error(`queue/next failed: HTTP ${resp.status}`);
    return (await resp.json()) as ReviewItemView;
  }

  async fetchStats(): Promise<QueueStats> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/stats`);
    if (!resp.ok) throw new Error(`stats failed: HTTP ${resp.status}`);
    return (await resp.json()) as QueueStats;
  }

  async submitVerdict(id: string, decision: Decision, reviewer: string): Promise<VerdictOutcome> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/verdict`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ id, decision, reviewer }),
    });
    if (resp.ok) {
      const body = (await resp.json()) as { decided_at: number };
      return { kind: 'ok', decidedAt: body.decided_at };
    }
    const message = await errorMessage(resp);
    if (resp.status === 409) return { kind: 'conflict', message };
    if (resp.status === 404) return { kind: 'not_found', message };
    throw new Error(`verdict failed: HTTP ${resp.status}: ${message}`);
  }
}

async function errorMessage(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    return body.error ?? `HTTP ${resp.status}`;
  } catch {
    return `HTTP ${resp.status}`;
  }
}
