/** Typed client for the review service's four endpoints. */
export class QueueClient {
    constructor(baseUrl = '', fetchImpl = (...args) => fetch(...args)) {
        this.baseUrl = baseUrl.replace(/\/$/, '');
        this.fetchImpl = fetchImpl;
    }
    imageUrl(id) {
        return `${this.baseUrl}/api/item/${id}/image`;
    }
    async fetchNext() {
        const resp = await this.fetchImpl(`${this.baseUrl}/api/queue/next`);
        if (resp.status === 204)
            return null;
        if (!resp.ok)
            throw new Error(`queue/next failed: HTTP ${resp.status}`);
        return (await resp.json());
    }
    async fetchStats() {
        const resp = await this.fetchImpl(`${this.baseUrl}/api/stats`);
        if (!resp.ok)
            throw new Error(`stats failed: HTTP ${resp.status}`);
        return (await resp.json());
    }
    async submitVerdict(id, decision, reviewer) {
        const resp = await this.fetchImpl(`${this.baseUrl}/api/verdict`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ id, decision, reviewer }),
        });
        if (resp.ok) {
            const body = (await resp.json());
            return { kind: 'ok', decidedAt: body.decided_at };
        }
        const message = await errorMessage(resp);
        if (resp.status === 409)
            return { kind: 'conflict', message };
        if (resp.status === 404)
            return { kind: 'not_found', message };
        throw new Error(`verdict failed: HTTP ${resp.status}: ${message}`);
    }
}
async function errorMessage(resp) {
    try {
        const body = (await resp.json());
        return body.error ?? `HTTP ${resp.status}`;
    }
    catch {
        return `HTTP ${resp.status}`;
    }
}
