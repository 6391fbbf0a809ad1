import { hardenGlobal } from "./interceptors";
import type { UrlHandler } from "./urls";

type AnyWindow = Window & typeof globalThis & Record<string, any>;

/**
 * Block message exchange between the page and third-party contexts.
 *
 * Outbound: a postMessage whose stated target origin is third-party is
 * discarded.  Inbound: a capture-phase listener registered before any page
 * script can register its own stops third-party-origin message events with
 * stopImmediatePropagation, so page listeners never observe them.  The
 * shim loading first (first child of head) is what makes the inbound
 * ordering guarantee hold.
 */
export function installMessageBlocking(win: AnyWindow, handler: UrlHandler): void {
  const nativePostMessage = win.postMessage;
  win.postMessage = function (message: unknown, targetOrigin?: unknown, transfer?: unknown) {
    if (typeof targetOrigin === "string" && /^https?:\/\//i.test(targetOrigin)) {
      let origin: string | null = null;
      try {
        const url = new URL(targetOrigin);
        origin = `${url.protocol}//${url.host}`;
      } catch {
        origin = null;
      }
      if (origin !== null && handler.isThirdPartyOrigin(origin)) {
        return; // discarded
      }
    }
    return (nativePostMessage as Function).call(win, message, targetOrigin, transfer);
  };
  hardenGlobal(win, "postMessage");

  win.addEventListener(
    "message",
    (event: MessageEvent) => {
      if (typeof event.origin === "string" && /^https?:/.test(event.origin)) {
        if (handler.isThirdPartyOrigin(event.origin)) {
          event.stopImmediatePropagation();
        }
      }
    },
    true,
  );
}
