images = open_images("ImageSet1.jpg")
ladies_total = 0
men_total = 0
for image in images:
    ladies_exist = query(image, "Is there a lady?")
    if ladies_exist == "yes":
        ladies_count = int(query(image, "How many ladies are wearing black shirt?"))
        ladies_total += ladies_count
    man_exist = query(image, "Is there a man?")
    if men_exist == "yes":
        men_count = int(query(image, "How many men are wearing black shirt?"))
        men_total += men_count
if ladies_total > men_total:
    answer = "yes"
else:
    answer = "no"
