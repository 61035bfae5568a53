x03=m9qtheibo8bhr22kw7eocj8t9vuux2/*ok*
x03=hisjaap5538y4b1l2ni1ryssux3my9/*ok*
x03=vi0acir5h8aryyruxu6i17e7m30zwc/*ok*
x03=kptq6qqnkio83i4ohh9uufgwqhd8vq/*ok*
x03=6m77ywrglcl312qtw1n87eech70yrx/*ok*
x03=c6b4l1vi31gy84s9z4msywc1ui6o5n/*ok*
x03=muafgqakltli7kiybsxmbyo0bnwyd8/*ok*
x03=hpxzhzu52mib6v8bbqx41l7dbj01iz/*ok*
x03=4jpbqnv70sgpvsb83iikv0d8wquxwr/*ok*
x03=1yv8gix50yowxc08ab233dejn862l2/*ok*
x03=hr1uu4dxlhi1eb3kjg6raf7bx2nltf/*ok*
x03=2rz8tflkdg4mqn2t6wgdi6cvzqlu7o/*ok*
x03=dkf63gr5ny5t4can7y8qna351hnzal/*ok*
x03=yurv1h9wcarmlqbvwj97govfnr58xp/*ok*
x03=cxaktwkic6l9chss4q26pawipig23s/*ok*
x03=jio46qtsqfij42qygp7mxlc5txvgvq/*ok*
x03=u0bodlgfshs06cjxdl1b2je8gsgkuo/*ok*
x03=v0cr8lqwci3qst8spvlms59ps01kjp/*ok*
x03=5zt02qxcvfms9f0dm82jm5mp4bqnch/*ok*
x03=gss8fyumb84df18mxj8u7pvj37whem/*ok*
x03=c31v28wvkabw1vc0ihho3mqzmfw940/*ok*
x03=xb7d7n3mmw4ggszjrz5a25zmoqyzm4/*ok*
x03=bmtghr94zvmjj8mv0k1xcmd4cf0bs1/*ok*
x03=90ubrud6idn7wn5193tafrxtbybnag/*ok*
x03=uvzxalpuplnemmh6asqu3nv27jyi0j/*ok*
