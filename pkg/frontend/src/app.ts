/** DOM wiring for the review loop: image, scores, verdict buttons, shortcuts. */

import { QueueClient } from './api.js';
import { ReviewSession, SessionState } from './session.js';

interface Refs {
  stage: HTMLElement;
  image: HTMLImageElement;
  itemId: HTMLElement;
  stageBadge: HTMLElement;
  semValue: HTMLElement;
  semMarker: HTMLElement;
  semBand: HTMLElement;
  structRow: HTMLElement;
  structValue: HTMLElement;
  notice: HTMLElement;
  stats: HTMLElement;
  acceptBtn: HTMLButtonElement;
  rejectBtn: HTMLButtonElement;
  retryBtn: HTMLButtonElement;
  panels: { reviewing: HTMLElement; complete: HTMLElement; failed: HTMLElement };
  failedMessage: HTMLElement;
  finalStats: HTMLElement;
}

/** Score-bar geometry: margins are mapped into [-R, R] around the threshold. */
const SEM_BAR_RANGE = 5.0;

function ref(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function collectRefs(): Refs {
  return {
    stage: ref('stage'),
    image: ref('item-image') as HTMLImageElement,
    itemId: ref('item-id'),
    stageBadge: ref('stage-badge'),
    semValue: ref('sem-value'),
    semMarker: ref('sem-marker'),
    semBand: ref('sem-band'),
    structRow: ref('struct-row'),
    structValue: ref('struct-value'),
    notice: ref('notice'),
    stats: ref('stats'),
    acceptBtn: ref('accept') as HTMLButtonElement,
    rejectBtn: ref('reject') as HTMLButtonElement,
    retryBtn: ref('retry') as HTMLButtonElement,
    panels: {
      reviewing: ref('panel-reviewing'),
      complete: ref('panel-complete'),
      failed: ref('panel-failed'),
    },
    failedMessage: ref('failed-message'),
    finalStats: ref('final-stats'),
  };
}

/** Threshold context for the reference line; the service API intentionally
 * exposes only the four queue endpoints, so tau comes from the page URL
 * (?tau_sem=...&delta=...) set by whoever launched the review round. */
function thresholdFromUrl(): { tau: number; delta: number } {
  const params = new URLSearchParams(window.location.search);
  const tau = Number.parseFloat(params.get('tau_sem') ?? '0');
  const delta = Number.parseFloat(params.get('delta') ?? '0');
  return { tau: Number.isFinite(tau) ? tau : 0, delta: Number.isFinite(delta) ? delta : 0 };
}

function renderStats(el: HTMLElement, stats: { pending: number; accepted: number; rejected: number }): void {
  el.textContent = `${stats.pending} pending · ${stats.accepted} accepted · ${stats.rejected} rejected`;
}

export function mountApp(): void {
  const refs = collectRefs();
  const client = new QueueClient('');
  const { tau, delta } = thresholdFromUrl();

  const render = (state: SessionState): void => {
    refs.panels.reviewing.hidden = state.kind !== 'reviewing';
    refs.panels.complete.hidden = state.kind !== 'complete';
    refs.panels.failed.hidden = state.kind !== 'failed';
    refs.stage.dataset.state = state.kind;

    if (state.kind === 'reviewing') {
      const item = state.item;
      refs.image.src = client.imageUrl(item.id);
      refs.itemId.textContent = item.id.slice(0, 12);
      refs.stageBadge.textContent = item.stage;
      refs.stageBadge.className = `badge badge-${item.stage}`;
      refs.semValue.textContent = `margin ${item.s_sem.toFixed(4)} (τ ${tau.toFixed(4)})`;
      const offset = Math.max(-SEM_BAR_RANGE, Math.min(SEM_BAR_RANGE, item.s_sem - tau));
      refs.semMarker.style.left = `${50 + (offset / SEM_BAR_RANGE) * 50}%`;
      const bandHalf = Math.min(SEM_BAR_RANGE, delta);
      refs.semBand.style.width = `${(bandHalf / SEM_BAR_RANGE) * 50}%`;
      refs.semBand.style.right = '50%';
      if (item.s_struct) {
        refs.structRow.hidden = false;
        const s = item.s_struct;
        refs.structValue.textContent = s.person_found
          ? `area ${s.area_ratio.toFixed(3)} · ${s.kpt_count}/17 keypoints`
          : 'no person found';
      } else {
        refs.structRow.hidden = true;
      }
      refs.notice.textContent = state.notice ?? '';
      refs.notice.hidden = state.notice === null;
      renderStats(refs.stats, state.stats);
    } else if (state.kind === 'complete') {
      renderStats(refs.finalStats, state.stats);
    } else if (state.kind === 'failed') {
      refs.failedMessage.textContent = state.message;
    }
  };

  const session = new ReviewSession(client, render, 'web');

  refs.acceptBtn.addEventListener('click', () => void session.decide('accept'));
  refs.rejectBtn.addEventListener('click', () => void session.decide('reject'));
  refs.retryBtn.addEventListener('click', () => void session.retry());

  document.addEventListener('keydown', (ev) => {
    if (ev.repeat || ev.metaKey || ev.ctrlKey || ev.altKey) return;
    if (ev.key === 'a') void session.decide('accept');
    else if (ev.key === 'r') void session.decide('reject');
    else if (ev.key === 's') refs.stats.scrollIntoView({ behavior: 'smooth' });
  });

  void session.start();
}
